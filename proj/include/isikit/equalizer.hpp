#pragma once

// Reduced-state soft-output Viterbi equalizer with arbitrary decision delay.
//
// The trellis spans nu symbols (|X|^nu states); the remaining channel tail is
// canceled per state by hard decisions read off the survivor path. A full
// forward pass is followed, for every output stage k, by a D-step backward
// recursion started from beta = 0 at stage k+D; bit LLRs are max-log
// combinations over the stage-k transitions.
//
// Backward branch metrics cancel the tail with the hard decisions of the
// forward maximum-likelihood path (one traceback per block). Freezing the
// per-state survivor tails instead pins every backward path to the forward
// winner of the state it lands on, which empirically destroys the soft-output
// gain of decision delays beyond L-1.
//
// Block edges: the L-1 guard symbols between blocks are zeros, so the trellis
// starts and ends in the all-guard state; symbol positions outside [0, K)
// contribute the value 0 regardless of the state label.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include "isikit/modulation.hpp"
#include "isikit/shortener.hpp"

namespace isikit {

enum class MetricKind { ForneyFeedback, Ungerboeck, HomFeedback };

struct TrellisConfig {
    int nu = 1;
    int d = 4;  // decision delay, >= nu
    Modulation modulation;
    MetricKind metric = MetricKind::ForneyFeedback;
    int max_states = 1 << 20;
    double llr_clamp = 50.0;
};

struct LlrFrame {
    std::vector<double> llrs;  // K * log2|X| values; > 0 means logical bit 1
    int bits_per_symbol = 1;
    int block_len = 0;

    double at(int k, int n) const { return llrs[static_cast<size_t>(k) * bits_per_symbol + n]; }
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct EqFilters {
    const TapVector* prefilter = nullptr;
    std::vector<cplx> f;  // Forney target taps, nu+1
    std::vector<cplx> b;  // feedback coefficients at delays nu+1.. (empty for Ungerboeck)
    std::vector<cplx> g;  // Ungerboeck taps g0..g_nu
    bool ungerboeck = false;
};

inline EqFilters bind_filters(const ShortenerFilters& filters, const TrellisConfig& cfg) {
    EqFilters eq;
    if (const auto* fom = std::get_if<FomFilters>(&filters)) {
        if (cfg.metric != MetricKind::ForneyFeedback)
            throw std::invalid_argument("equalize: FOM filters require the Forney feedback metric");
        eq.prefilter = &fom->w;
        eq.f = fom->f.taps;
        eq.b = fom->b.taps;
    } else if (const auto* hom = std::get_if<HomFilters>(&filters)) {
        if (cfg.metric != MetricKind::HomFeedback && cfg.metric != MetricKind::ForneyFeedback)
            throw std::invalid_argument("equalize: HOM filters require a feedback metric");
        eq.prefilter = &hom->w_hom;
        eq.f = hom->h_f.taps;
        eq.b = hom->h_b.taps;
    } else {
        const auto& ubm = std::get<UbmFilters>(filters);
        if (cfg.metric != MetricKind::Ungerboeck)
            throw std::invalid_argument("equalize: UBM filters require the Ungerboeck metric");
        eq.prefilter = &ubm.v;
        eq.g = ubm.g.taps;
        eq.ungerboeck = true;
    }
    const int want = cfg.nu + 1;
    if ((eq.ungerboeck ? static_cast<int>(eq.g.size()) : static_cast<int>(eq.f.size())) != want)
        throw std::invalid_argument("equalize: filter memory does not match config.nu");
    return eq;
}

}  // namespace detail

// Forney-model branch metric |y~ - sum f_l x_{k-l} - sum b_l x^_{k-l-nu-1}|^2.
// The HOM variant is the same formula with (f, b) = (h_f, h_b).
inline double branch_metric_forney(cplx y_filtered, const std::vector<cplx>& symbols,
                                   const std::vector<cplx>& feedback, const TapVector& f,
                                   const TapVector& b) {
    cplx r = y_filtered;
    for (int l = 0; l < f.size(); ++l) r -= f.taps[static_cast<size_t>(l)] * symbols[static_cast<size_t>(l)];
    for (int l = 0; l < b.size(); ++l) r -= b.taps[static_cast<size_t>(l)] * feedback[static_cast<size_t>(l)];
    return std::norm(r);
}

// Ungerboeck branch metric g0 |x_k|^2 - 2 Re{x_k^* (y~ - sum_{l>=1} g_l x_{k-l})};
// not a squared distance, may be negative.
inline double branch_metric_ungerboeck(cplx y_filtered, const std::vector<cplx>& symbols,
                                       const TapVector& g) {
    const cplx xk = symbols[0];
    cplx inner = y_filtered;
    for (int l = 1; l < g.size(); ++l) inner -= g.taps[static_cast<size_t>(l)] * symbols[static_cast<size_t>(l)];
    return g.taps[0].real() * std::norm(xk) - 2.0 * std::real(std::conj(xk) * inner);
}

// Equalizes one block of K symbols. y must hold the K + L - 1 received
// samples including the guard tail.
inline LlrFrame equalize(const std::vector<cplx>& y, const ShortenerFilters& filters,
                         const TrellisConfig& cfg, int block_len) {
    if (block_len < 1) throw std::invalid_argument("equalize: block_len must be >= 1");
    if (cfg.nu < 0 || cfg.d < cfg.nu) throw std::invalid_argument("equalize: need 0 <= nu <= d");
    const detail::EqFilters eq = detail::bind_filters(filters, cfg);

    const int q = cfg.modulation.cardinality();
    const int nbits = cfg.modulation.bits_per_symbol;
    const int num_k = block_len;
    uint64_t s_count = 1;
    for (int i = 0; i < cfg.nu; ++i) {
        s_count *= static_cast<uint64_t>(q);
        if (s_count > static_cast<uint64_t>(cfg.max_states))
            throw std::invalid_argument("equalize: state budget exceeded");
    }
    const int ns = static_cast<int>(s_count);
    const int ntail = static_cast<int>(eq.b.size());
    const int depth = cfg.nu + ntail;          // symbols older than x_t referenced by the metric
    const int stages = num_k + depth;          // t = 0 .. stages-1
    const int shift = ns / (cfg.nu > 0 ? q : 1);  // digit weight of the newest window symbol

    // Prefilter; samples outside the received block are zero.
    std::vector<cplx> yt(static_cast<size_t>(stages), cplx{0.0, 0.0});
    {
        const TapVector& w = *eq.prefilter;
        const int ylen = static_cast<int>(y.size());
        for (int t = 0; t < stages; ++t) {
            cplx acc{0.0, 0.0};
            for (int i = 0; i < w.size(); ++i) {
                const int src = t - (i - w.origin);
                if (src >= 0 && src < ylen) acc += w.taps[static_cast<size_t>(i)] * y[static_cast<size_t>(src)];
            }
            yt[static_cast<size_t>(t)] = acc;
        }
    }

    const auto& pt = cfg.modulation.points;
    auto sym_value = [&](int pos, int digit) -> cplx {
        return (pos >= 0 && pos < num_k) ? pt[static_cast<size_t>(digit)] : cplx{0.0, 0.0};
    };

    // alpha[t+1][j]; gamma[t][i][a]; tails[t+1][j][.] with stage -1 stored at index 0.
    std::vector<double> alpha(static_cast<size_t>(stages + 1) * ns, detail::kInf);
    std::vector<double> gamma(static_cast<size_t>(stages) * ns * q, detail::kInf);
    std::vector<uint8_t> tails;
    std::vector<uint8_t> win_sym;  // entering symbol of the surviving transition, for traceback
    std::vector<int32_t> win_pred;
    if (ntail > 0) {
        tails.assign(static_cast<size_t>(stages + 1) * ns * ntail, 0);
        win_sym.assign(static_cast<size_t>(stages) * ns, 0);
        win_pred.assign(static_cast<size_t>(stages) * ns, -1);
    }
    alpha[0] = 0.0;  // all-guard state before the block

    for (int t = 0; t < stages; ++t) {
        double* a_prev = &alpha[static_cast<size_t>(t) * ns];
        double* a_next = &alpha[static_cast<size_t>(t + 1) * ns];
        double* gam = &gamma[static_cast<size_t>(t) * ns * q];
        const int a_max = (t < num_k) ? q : 1;  // guard stages force the zero symbol
        for (int i = 0; i < ns; ++i) {
            if (a_prev[i] == detail::kInf) continue;
            // Window of state i at stage t-1 covers x_{t-1} .. x_{t-nu}, newest
            // in the highest base-q digit.
            cplx base = yt[static_cast<size_t>(t)];
            {
                int rem = i;
                int weight = shift;
                for (int p = 0; p < cfg.nu; ++p) {  // slot p holds x_{t-1-p}
                    const int digit = rem / weight;
                    rem %= weight;
                    if (p + 1 < cfg.nu) weight /= q;
                    const cplx v = sym_value(t - 1 - p, digit);
                    base -= (eq.ungerboeck ? eq.g[static_cast<size_t>(p + 1)] : eq.f[static_cast<size_t>(p + 1)]) * v;
                }
            }
            if (ntail > 0) {
                const uint8_t* tl = &tails[(static_cast<size_t>(t) * ns + i) * ntail];
                for (int m = 0; m < ntail; ++m)
                    base -= eq.b[static_cast<size_t>(m)] * sym_value(t - 1 - cfg.nu - m, tl[m]);
            }
            const int oldest = (cfg.nu > 0) ? (i % q) : 0;
            for (int a = 0; a < a_max; ++a) {
                const cplx va = sym_value(t, a);
                double gval;
                if (eq.ungerboeck) {
                    gval = eq.g[0].real() * std::norm(va) - 2.0 * std::real(std::conj(va) * base);
                } else {
                    gval = std::norm(base - eq.f[0] * va);
                }
                gam[static_cast<size_t>(i) * q + a] = gval;
                const int j = (cfg.nu > 0) ? (a * shift + i / q) : 0;
                const double cand = a_prev[i] + gval;
                if (cand < a_next[j]) {
                    a_next[j] = cand;
                    if (ntail > 0) {
                        uint8_t* dst = &tails[(static_cast<size_t>(t + 1) * ns + j) * ntail];
                        const uint8_t* src = &tails[(static_cast<size_t>(t) * ns + i) * ntail];
                        dst[0] = static_cast<uint8_t>((cfg.nu > 0) ? oldest : a);
                        for (int m = 1; m < ntail; ++m) dst[m] = src[m - 1];
                        win_sym[static_cast<size_t>(t) * ns + j] = static_cast<uint8_t>(a);
                        win_pred[static_cast<size_t>(t) * ns + j] = i;
                    }
                }
            }
        }
    }

    // Backward-pass branch metrics: tail canceled with the ML-path decisions.
    std::vector<double> gamma_b;
    if (ntail > 0) {
        std::vector<uint8_t> ml(static_cast<size_t>(stages), 0);
        {
            const double* a_fin = &alpha[static_cast<size_t>(stages) * ns];
            int cur = 0;
            for (int j = 1; j < ns; ++j)
                if (a_fin[j] < a_fin[cur]) cur = j;
            for (int t = stages - 1; t >= 0; --t) {
                ml[static_cast<size_t>(t)] = win_sym[static_cast<size_t>(t) * ns + cur];
                cur = win_pred[static_cast<size_t>(t) * ns + cur];
                if (cur < 0) cur = 0;
            }
        }
        gamma_b.assign(static_cast<size_t>(stages) * ns * q, detail::kInf);
        for (int t = 0; t < stages; ++t) {
            const double* a_prev = &alpha[static_cast<size_t>(t) * ns];
            double* gam = &gamma_b[static_cast<size_t>(t) * ns * q];
            const int a_max = (t < num_k) ? q : 1;
            for (int i = 0; i < ns; ++i) {
                if (a_prev[i] == detail::kInf) continue;
                cplx base = yt[static_cast<size_t>(t)];
                {
                    int rem = i;
                    int weight = shift;
                    for (int p = 0; p < cfg.nu; ++p) {
                        const int digit = rem / weight;
                        rem %= weight;
                        if (p + 1 < cfg.nu) weight /= q;
                        base -= eq.f[static_cast<size_t>(p + 1)] * sym_value(t - 1 - p, digit);
                    }
                }
                for (int m = 0; m < ntail; ++m) {
                    const int pos = t - 1 - cfg.nu - m;
                    base -= eq.b[static_cast<size_t>(m)] * sym_value(pos, pos >= 0 ? ml[static_cast<size_t>(pos)] : 0);
                }
                for (int a = 0; a < a_max; ++a)
                    gam[static_cast<size_t>(i) * q + a] = std::norm(base - eq.f[0] * sym_value(t, a));
            }
        }
    }
    const std::vector<double>& gback = (ntail > 0) ? gamma_b : gamma;

    // Backward recursions and LLR assembly.
    LlrFrame frame;
    frame.bits_per_symbol = nbits;
    frame.block_len = num_k;
    frame.llrs.assign(static_cast<size_t>(num_k) * nbits, 0.0);
    std::vector<double> beta_cur(static_cast<size_t>(ns)), beta_prev(static_cast<size_t>(ns));
    std::vector<double> best0(static_cast<size_t>(nbits)), best1(static_cast<size_t>(nbits));

    for (int k = 0; k < num_k; ++k) {
        const int m = std::min(k + cfg.d, stages - 1);
        const double* a_m = &alpha[static_cast<size_t>(m + 1) * ns];
        for (int j = 0; j < ns; ++j) beta_cur[static_cast<size_t>(j)] = (a_m[j] < detail::kInf) ? 0.0 : detail::kInf;
        for (int t = m; t > k; --t) {
            const double* a_prev = &alpha[static_cast<size_t>(t) * ns];
            const double* gam = &gback[static_cast<size_t>(t) * ns * q];
            const int a_max = (t < num_k) ? q : 1;
            for (int i = 0; i < ns; ++i) {
                double best = detail::kInf;
                if (a_prev[i] < detail::kInf) {
                    for (int a = 0; a < a_max; ++a) {
                        const int j = (cfg.nu > 0) ? (a * shift + i / q) : 0;
                        const double cand = gam[static_cast<size_t>(i) * q + a] + beta_cur[static_cast<size_t>(j)];
                        if (cand < best) best = cand;
                    }
                }
                beta_prev[static_cast<size_t>(i)] = best;
            }
            std::swap(beta_cur, beta_prev);
        }
        // beta_cur now holds beta_k; combine over the stage-k transitions.
        const double* a_prev = &alpha[static_cast<size_t>(k) * ns];
        const double* gam = &gamma[static_cast<size_t>(k) * ns * q];
        std::fill(best0.begin(), best0.end(), detail::kInf);
        std::fill(best1.begin(), best1.end(), detail::kInf);
        for (int i = 0; i < ns; ++i) {
            if (a_prev[i] == detail::kInf) continue;
            for (int a = 0; a < q; ++a) {
                const int j = (cfg.nu > 0) ? (a * shift + i / q) : 0;
                const double val = a_prev[i] + gam[static_cast<size_t>(i) * q + a] + beta_cur[static_cast<size_t>(j)];
                for (int n = 0; n < nbits; ++n) {
                    if ((a >> n) & 1) {
                        if (val < best1[static_cast<size_t>(n)]) best1[static_cast<size_t>(n)] = val;
                    } else {
                        if (val < best0[static_cast<size_t>(n)]) best0[static_cast<size_t>(n)] = val;
                    }
                }
            }
        }
        for (int n = 0; n < nbits; ++n) {
            double l = best0[static_cast<size_t>(n)] - best1[static_cast<size_t>(n)];
            if (std::isnan(l)) l = 0.0;
            l = std::min(std::max(l, -cfg.llr_clamp), cfg.llr_clamp);
            frame.llrs[static_cast<size_t>(k) * nbits + n] = l;
        }
    }
    return frame;
}

// Per-bit sign decisions mapped back to constellation points; a zero LLR
// resolves to logical 1 by convention.
inline std::vector<uint32_t> hard_labels(const LlrFrame& frame) {
    std::vector<uint32_t> out(static_cast<size_t>(frame.block_len), 0);
    for (int k = 0; k < frame.block_len; ++k) {
        uint32_t label = 0;
        for (int n = 0; n < frame.bits_per_symbol; ++n)
            if (frame.at(k, n) >= 0.0) label |= 1u << n;
        out[static_cast<size_t>(k)] = label;
    }
    return out;
}

inline std::vector<cplx> hard_decisions(const LlrFrame& frame, const Modulation& mod) {
    const std::vector<uint32_t> labels = hard_labels(frame);
    std::vector<cplx> out(labels.size());
    for (size_t k = 0; k < labels.size(); ++k) out[k] = mod.points[labels[k]];
    return out;
}

}  // namespace isikit
