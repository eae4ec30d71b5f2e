#pragma once

// Homomorphic minimum-phase factorization and the target/feedback split used
// by the conventional cepstrum-based shortener.

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "isikit/channel.hpp"
#include "isikit/spectral.hpp"

namespace isikit {

struct MinPhaseOptions {
    int fft_size = 8192;        // power of two, >= 16*L
    int prefilter_len = 129;    // two-sided taps kept for the all-pass prefilter
    double allpass_tol = 0.25;  // max | |W(w)|*sqrt(N0) - 1 | allowed after truncation
    double log_clamp = 1e-10;   // |H| floor before the log (spectral nulls)
};

struct MinPhaseResult {
    TapVector w_hom;    // all-pass prefilter, |W(w)| = 1/sqrt(N0), truncated two-sided FIR
    TapVector h_tilde;  // minimum-phase equivalent of h scaled by 1/sqrt(N0), length L
    double allpass_dev = 0.0;  // measured post-truncation all-pass deviation
};

namespace detail {

// Spectra on the half-bin-offset grid w_m = -pi + 2*pi*(m+1/2)/N, which never
// samples a spectral null exactly (EPR-4 has exact nulls at 0 and pi).
struct OffsetGrid {
    int n;
    double omega(int m) const { return -kPi + 2.0 * kPi * (m + 0.5) / n; }

    std::vector<cplx> dtft(const TapVector& x) const {
        std::vector<cplx> a(static_cast<size_t>(n), cplx{0.0, 0.0});
        const double w0 = -kPi + kPi / n;
        for (int i = 0; i < x.size(); ++i) {
            const int d = i - x.origin;
            const double ph = w0 * d;
            a[static_cast<size_t>(floor_mod(d, n))] += x.taps[static_cast<size_t>(i)] * cplx(std::cos(ph), std::sin(ph));
        }
        fft_pow2(a, +1);
        return a;
    }

    // tap[l] = (1/N) sum_m v[m] exp(-j w_m l), l in [lo, hi]
    TapVector idtft(std::vector<cplx> v, int lo, int hi) const {
        fft_pow2(v, -1);
        TapVector out;
        out.origin = -lo;
        out.taps.resize(static_cast<size_t>(hi - lo + 1));
        const double w0 = -kPi + kPi / n;
        for (int l = lo; l <= hi; ++l) {
            const double ph = -w0 * l;
            out.taps[static_cast<size_t>(l - lo)] =
                cplx(std::cos(ph), std::sin(ph)) * v[static_cast<size_t>(floor_mod(l, n))] / static_cast<double>(n);
        }
        return out;
    }
};

}  // namespace detail

// Minimum-phase spectral factor of |H|^2 via the real-cepstrum method:
// log-magnitude -> cepstrum -> causal folding -> exponentiation. Returns the
// factor scaled by 1/sqrt(N0) plus the all-pass prefilter that maps H onto it.
inline MinPhaseResult min_phase(const Cir& cir, const MinPhaseOptions& opt = {}) {
    const int nf = opt.fft_size;
    const int len = cir.length();
    if (!detail::is_pow2(nf)) throw std::invalid_argument("min_phase: fft_size must be a power of two");
    if (nf < 16 * len) throw std::invalid_argument("min_phase: fft_size must be >= 16*L");
    if (opt.prefilter_len < 1) throw std::invalid_argument("min_phase: prefilter_len must be >= 1");

    const detail::OffsetGrid grid{nf};
    const std::vector<cplx> bigH = grid.dtft(cir.h);

    std::vector<cplx> logm(static_cast<size_t>(nf));
    for (int m = 0; m < nf; ++m)
        logm[static_cast<size_t>(m)] = std::log(std::max(std::abs(bigH[static_cast<size_t>(m)]), opt.log_clamp));

    // Cepstrum of log|H|, then fold the anticausal half onto the causal half.
    TapVector ceps = grid.idtft(std::move(logm), 0, nf - 1);
    std::vector<cplx> folded(static_cast<size_t>(nf), cplx{0.0, 0.0});
    folded[0] = ceps.taps[0];
    for (int l = 1; l < nf / 2; ++l) folded[static_cast<size_t>(l)] = 2.0 * ceps.taps[static_cast<size_t>(l)];
    folded[static_cast<size_t>(nf / 2)] = ceps.taps[static_cast<size_t>(nf / 2)];

    std::vector<cplx> hmin = grid.dtft(TapVector(std::move(folded), 0));
    for (auto& v : hmin) v = std::exp(v);

    MinPhaseResult res;
    const double inv_sqrt_n0 = 1.0 / std::sqrt(cir.n0);
    {
        TapVector t = grid.idtft(hmin, 0, len - 1);  // the factor has exactly L taps
        for (auto& c : t.taps) c *= inv_sqrt_n0;
        res.h_tilde = std::move(t);
    }

    // W(w) = Hmin(w) / (sqrt(N0) H(w)); built with exact all-pass magnitude so
    // clamped null bins cannot inject energy spikes.
    std::vector<cplx> w(static_cast<size_t>(nf));
    for (int m = 0; m < nf; ++m) {
        const cplx r = hmin[static_cast<size_t>(m)] * std::conj(bigH[static_cast<size_t>(m)]);
        const double mag = std::abs(r);
        w[static_cast<size_t>(m)] = (mag > 1e-300 ? r / mag : cplx{1.0, 0.0}) * inv_sqrt_n0;
    }
    const int half = (opt.prefilter_len - 1) / 2;
    res.w_hom = grid.idtft(std::move(w), -half, opt.prefilter_len - 1 - half);

    // Post-truncation all-pass deviation, measured on a standard grid.
    const Spectrum wt = dtft(res.w_hom, FrequencyGrid::make(std::max(2048, 4 * opt.prefilter_len)));
    double dev = 0.0;
    for (const auto& v : wt.values) dev = std::max(dev, std::abs(std::abs(v) * std::sqrt(cir.n0) - 1.0));
    res.allpass_dev = dev;
    if (dev > opt.allpass_tol)
        throw std::runtime_error("min_phase: truncated prefilter all-pass deviation " + std::to_string(dev) +
                                 " exceeds tolerance " + std::to_string(opt.allpass_tol));
    return res;
}

// h_f = first nu+1 taps of h_tilde; h_b = the remaining taps kept at their
// original delays nu+1 .. L-1 (the origin carries the zero-padding).
inline std::pair<TapVector, TapVector> split_target(const TapVector& h_tilde, int nu) {
    const int len = h_tilde.size();
    if (nu < 0 || nu > len - 1) throw std::invalid_argument("split_target: need 0 <= nu <= L-1");
    TapVector h_f;
    h_f.origin = 0;
    h_f.taps.assign(h_tilde.taps.begin(), h_tilde.taps.begin() + nu + 1);
    TapVector h_b;
    h_b.origin = -(nu + 1);
    h_b.taps.assign(h_tilde.taps.begin() + nu + 1, h_tilde.taps.end());
    return {std::move(h_f), std::move(h_b)};
}

}  // namespace isikit
