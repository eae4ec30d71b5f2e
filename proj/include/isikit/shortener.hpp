#pragma once

// Channel shortener design. Three designs are produced behind one interface:
//
//   FOM  -- Forney-model shortener (w, f, b) maximizing the mismatched-model
//           information rate with decision feedback of quality sigma. The
//           prefilter w and feedback filter b are closed forms given the
//           target response f; f itself is optimized by a curvature-assisted
//           gradient ascent on the closed-form rate.
//   UBM  -- Ungerboeck-model shortener (v, g), no feedback; the rate is
//           concave in g and maximized by a damped Newton iteration.
//   HOM  -- conventional homomorphic (minimum-phase) shortener.
//
// Rate units are nats per symbol throughout.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "isikit/channel.hpp"
#include "isikit/minphase.hpp"
#include "isikit/spectral.hpp"

namespace isikit {

inline constexpr int kRateGridPoints = 4096;    // reported rates
inline constexpr int kDesignGridPoints = 1024;  // inner design loops
inline constexpr int kPrefilterLen = 129;       // two-sided prefilter budget (w, v, w_hom alike)

// Decision-feedback quality: sigma = (1/K) E[x_hat x^dag], eta = (1/K) E[x_hat x_hat^dag].
// Hard-decision feedback has eta = 1; eta never enters the design formulas.
struct FeedbackQuality {
    double sigma = 1.0;
    double eta = 1.0;

    FeedbackQuality() = default;
    FeedbackQuality(double s, double e = 1.0) : sigma(s), eta(e) {
        if (!(0.0 <= sigma && sigma <= eta && eta <= 1.0))
            throw std::invalid_argument("FeedbackQuality: need 0 <= sigma <= eta <= 1");
    }
};

struct FomFilters {
    TapVector w;        // two-sided prefilter
    TapVector f;        // target response, nu+1 taps at delays 0..nu
    TapVector b;        // feedback taps at delays nu+1..L-1 (empty when nu = L-1)
    double sigma = 0.0;
    double milb = 0.0;  // achieved rate, nats/symbol
    bool converged = true;
    int iterations = 0;
    bool w_truncation_warning = false;
    std::vector<double> milb_history;  // rate after each accepted ascent step
};

struct UbmFilters {
    TapVector v;        // two-sided prefilter
    TapVector g;        // g_0..g_nu, g_0 real
    double milb = 0.0;
    double gm3_residual = 0.0;  // mean(M*(1+G)), -1 at the optimum
    int iterations = 0;
};

struct HomFilters {
    TapVector w_hom;
    TapVector h_f;
    TapVector h_b;
    double allpass_dev = 0.0;
};

using ShortenerFilters = std::variant<FomFilters, UbmFilters, HomFilters>;

// ---------------------------------------------------------------------------
// Spectral building blocks
// ---------------------------------------------------------------------------

// M(w) = -N0 / (N0 + |H(w)|^2); real, in [-1, 0).
inline Spectrum m_spectrum(const Cir& cir, const FrequencyGrid& grid) {
    Spectrum h = dtft(cir.h, grid);
    Spectrum m;
    m.grid = grid;
    m.values.resize(h.values.size());
    for (size_t k = 0; k < h.values.size(); ++k)
        m.values[k] = cplx(-cir.n0 / (cir.n0 + std::norm(h.values[k])), 0.0);
    return m;
}

// M~(w) = sigma^2 * (1 + M(w)) - sigma.
inline Spectrum m_tilde_spectrum(const Spectrum& m, double sigma) {
    Spectrum mt;
    mt.grid = m.grid;
    mt.values.resize(m.values.size());
    for (size_t k = 0; k < m.values.size(); ++k)
        mt.values[k] = sigma * sigma * (1.0 + m.values[k]) - sigma;
    return mt;
}

struct EpsilonVectors {
    std::vector<cplx> eps1;  // length L-nu-1
    std::vector<cplx> eps2;  // row-major (L-nu-1) x (L-nu-1), Hermitian Toeplitz
    int dim = 0;
    bool near_singular = false;
};

namespace detail {

// Precomputed per-(channel, grid) quantities shared by the FOM formulas.
struct FomContext {
    int n = 0;
    int len = 0;   // channel length L
    int nu = 0;
    int ntail = 0; // L - nu - 1
    double n0 = 0.0;
    std::vector<cplx> h;      // H(w)
    std::vector<cplx> u;      // e^{jw}
    std::vector<double> m;    // M(w)
    std::vector<double> s;    // N0 + |H(w)|^2

    FomContext(const Cir& cir, int nu_in, const FrequencyGrid& grid) {
        n = grid.n_points;
        len = cir.length();
        nu = nu_in;
        if (nu < 0 || nu > len - 1) throw std::invalid_argument("shortener: need 0 <= nu <= L-1");
        ntail = len - nu - 1;
        n0 = cir.n0;
        Spectrum hs = dtft(cir.h, grid);
        h = std::move(hs.values);
        u.resize(static_cast<size_t>(n));
        m.resize(static_cast<size_t>(n));
        s.resize(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) {
            const double w = grid.omegas[static_cast<size_t>(k)];
            u[static_cast<size_t>(k)] = cplx(std::cos(w), std::sin(w));
            const double h2 = std::norm(h[static_cast<size_t>(k)]);
            s[static_cast<size_t>(k)] = n0 + h2;
            m[static_cast<size_t>(k)] = -n0 / (n0 + h2);
        }
    }

    std::vector<cplx> eval_f(const TapVector& f) const {
        std::vector<cplx> out(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) {
            cplx acc{0.0, 0.0};
            cplx p{1.0, 0.0};
            const cplx uk = u[static_cast<size_t>(k)];
            for (int i = 0; i < f.size(); ++i) {
                acc += f.taps[static_cast<size_t>(i)] * p;
                p *= uk;
            }
            out[static_cast<size_t>(k)] = acc;
        }
        return out;
    }
};

// eps1 and the Hermitian Toeplitz eps2 for a given F(w).
inline void epsilon_raw(const FomContext& c, const std::vector<cplx>& bigF, double sigma,
                        Eigen::VectorXcd& e1, Eigen::MatrixXcd& e2) {
    const int d = c.ntail;
    e1 = Eigen::VectorXcd::Zero(d);
    Eigen::VectorXcd toep = Eigen::VectorXcd::Zero(d);  // toep[q] = mean[ Mt*P/(1+P) * u^q ]
    for (int k = 0; k < c.n; ++k) {
        const size_t sk = static_cast<size_t>(k);
        const double p = std::norm(bigF[sk]);
        const double mt = sigma * sigma * (1.0 + c.m[sk]) - sigma;
        const cplx uk = c.u[sk];
        const double wt = mt * p / (1.0 + p);
        cplx pw{1.0, 0.0};
        for (int q = 0; q < d; ++q) {
            toep[q] += wt * pw;
            pw *= uk;
        }
        // phi_q = u^{nu+1+q}
        cplx ph = std::pow(uk, c.nu + 1);
        const cplx base = sigma * c.m[sk] * std::conj(bigF[sk]);
        for (int q = 0; q < d; ++q) {
            e1[q] += base * ph;
            ph *= uk;
        }
    }
    e1 /= static_cast<double>(c.n);
    toep /= static_cast<double>(c.n);
    e2.resize(d, d);
    for (int q = 0; q < d; ++q)
        for (int r = 0; r < d; ++r) e2(q, r) = (q >= r) ? toep[q - r] : std::conj(toep[r - q]);
}

// Solves the ridged system: y = (-e2 - ridge)^{-1} e1, so eps2^{-1} eps1 = -y.
// Returns false when e1 is zero (feedback term vanishes).
inline bool epsilon_solve(const Eigen::VectorXcd& e1, const Eigen::MatrixXcd& e2, Eigen::VectorXcd& y) {
    const int d = static_cast<int>(e1.size());
    if (d == 0 || e1.norm() == 0.0) return false;
    const double ridge = 1e-12 * e2.trace().real() / d;  // trace < 0: pushes eigenvalues away from 0
    Eigen::MatrixXcd a = -(e2 + ridge * Eigen::MatrixXcd::Identity(d, d));
    Eigen::LLT<Eigen::MatrixXcd> llt(a);
    if (llt.info() != Eigen::Success) throw std::runtime_error("shortener: eps2 singular after ridge");
    y = llt.solve(e1);
    return true;
}

}  // namespace detail

// Grid-mean evaluations of the feedback moment vector eps1 and matrix eps2.
inline EpsilonVectors epsilon_vectors(const TapVector& f, const Cir& cir, double sigma, int nu,
                                      const FrequencyGrid& grid) {
    detail::FomContext c(cir, nu, grid);
    if (c.ntail < 1) throw std::invalid_argument("epsilon_vectors: need L-nu-1 >= 1");
    Eigen::VectorXcd e1;
    Eigen::MatrixXcd e2;
    detail::epsilon_raw(c, c.eval_f(f), sigma, e1, e2);
    EpsilonVectors out;
    out.dim = c.ntail;
    out.eps1.assign(e1.data(), e1.data() + e1.size());
    out.eps2.resize(static_cast<size_t>(c.ntail) * c.ntail);
    for (int q = 0; q < c.ntail; ++q)
        for (int r = 0; r < c.ntail; ++r) out.eps2[static_cast<size_t>(q) * c.ntail + r] = e2(q, r);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(-e2, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    out.near_singular = ev.maxCoeff() <= 0.0 || ev.minCoeff() < 1e-12 * ev.maxCoeff();
    return out;
}

// ---------------------------------------------------------------------------
// Rate formulas
// ---------------------------------------------------------------------------

// General mismatched-model rate for arbitrary (W, f, b) at feedback quality sigma.
inline double milb_general(const Spectrum& w, const TapVector& f, const TapVector& b, const Cir& cir,
                           double sigma) {
    const FrequencyGrid& grid = w.grid;
    const Spectrum hs = dtft(cir.h, grid);
    const Spectrum fs = dtft(f, grid);
    const Spectrum bs = dtft(b, grid);
    double acc = 0.0;
    for (int k = 0; k < grid.n_points; ++k) {
        const size_t sk = static_cast<size_t>(k);
        const cplx bigH = hs.values[sk];
        const cplx bigW = w.values[sk];
        const cplx bigF = fs.values[sk];
        const cplx bigB = bs.values[sk];
        const double p = std::norm(bigF);
        const double sv = cir.n0 + std::norm(bigH);
        const double lw = std::norm(bigF * bigW) * sv + sigma * std::norm(bigF * bigB) -
                          2.0 * sigma * p * std::real(bigH * bigW * std::conj(bigB));
        acc += std::log1p(p) - p - lw / (1.0 + p) + 2.0 * std::real(std::conj(bigF) * (bigW * bigH - sigma * bigB));
    }
    return acc / grid.n_points;
}

inline double milb_general(const TapVector& w, const TapVector& f, const TapVector& b, const Cir& cir,
                           double sigma, const FrequencyGrid& grid) {
    return milb_general(dtft(w, grid), f, b, cir, sigma);
}

namespace detail {

inline double j_of_f(const FomContext& c, const std::vector<cplx>& bigF) {
    double acc = 0.0;
    for (int k = 0; k < c.n; ++k) {
        const size_t sk = static_cast<size_t>(k);
        const double p = std::norm(bigF[sk]);
        acc += std::log1p(p) + c.m[sk] * (1.0 + p);
    }
    return 1.0 + acc / c.n;
}

inline double theorem1_rate_ctx(const FomContext& c, const std::vector<cplx>& bigF, double sigma) {
    const double j = j_of_f(c, bigF);
    if (sigma <= 0.0 || c.ntail == 0) return j;
    Eigen::VectorXcd e1;
    Eigen::MatrixXcd e2;
    epsilon_raw(c, bigF, sigma, e1, e2);
    Eigen::VectorXcd y;
    if (!epsilon_solve(e1, e2, y)) return j;
    return j + e1.dot(y).real();  // -eps1^dag eps2^{-1} eps1 = +e1^dag y
}

// dI/df_k^* for k = 0..nu; the steepest-ascent direction in f.
inline std::vector<cplx> fom_gradient_ctx(const FomContext& c, const std::vector<cplx>& bigF, double sigma) {
    const int nf = c.nu + 1;
    std::vector<cplx> grad(static_cast<size_t>(nf), cplx{0.0, 0.0});
    Eigen::VectorXcd y;
    bool with_fb = false;
    if (sigma > 0.0 && c.ntail > 0) {
        Eigen::VectorXcd e1;
        Eigen::MatrixXcd e2;
        epsilon_raw(c, bigF, sigma, e1, e2);
        with_fb = epsilon_solve(e1, e2, y);
    }
    for (int k = 0; k < c.n; ++k) {
        const size_t sk = static_cast<size_t>(k);
        const cplx uk = c.u[sk];
        const double p = std::norm(bigF[sk]);
        const cplx fc = std::conj(bigF[sk]);
        cplx c1 = (c.m[sk] + 1.0 / (1.0 + p)) * fc;
        if (with_fb) {
            cplx z{0.0, 0.0};  // phi(w)^dag y
            cplx ph = std::pow(uk, c.nu + 1);
            for (int q = 0; q < c.ntail; ++q) {
                z += std::conj(ph) * y[q];
                ph *= uk;
            }
            const double mt = sigma * sigma * (1.0 + c.m[sk]) - sigma;
            c1 += sigma * c.m[sk] * z + mt * fc * std::norm(z) / ((1.0 + p) * (1.0 + p));
        }
        cplx pw{1.0, 0.0};
        for (int t = 0; t < nf; ++t) {
            grad[static_cast<size_t>(t)] += c1 * pw;
            pw *= uk;
        }
    }
    for (auto& g : grad) g = std::conj(g) / static_cast<double>(c.n);
    return grad;
}

}  // namespace detail

// Closed-form rate at the optimal (w, b) for a given target response f.
inline double theorem1_rate(const TapVector& f, const Cir& cir, double sigma, const FrequencyGrid& grid) {
    detail::FomContext c(cir, static_cast<int>(f.size()) - 1, grid);
    return detail::theorem1_rate_ctx(c, c.eval_f(f), sigma);
}

// Analytic gradient dI/df_k^* of theorem1_rate; the primary correctness gate
// is agreement with central finite differences.
inline std::vector<cplx> fom_gradient(const TapVector& f, const Cir& cir, double sigma,
                                      const FrequencyGrid& grid) {
    detail::FomContext c(cir, static_cast<int>(f.size()) - 1, grid);
    return detail::fom_gradient_ctx(c, c.eval_f(f), sigma);
}

// Optimal feedback filter for a given f; taps sit at delays nu+1..L-1.
inline TapVector optimal_b(const TapVector& f, const Cir& cir, double sigma, const FrequencyGrid& grid) {
    const int nu = static_cast<int>(f.size()) - 1;
    detail::FomContext c(cir, nu, grid);
    TapVector b;
    b.origin = -(nu + 1);
    b.taps.assign(static_cast<size_t>(c.ntail), cplx{0.0, 0.0});
    if (sigma <= 0.0 || c.ntail == 0) return b;
    Eigen::VectorXcd e1;
    Eigen::MatrixXcd e2;
    detail::epsilon_raw(c, c.eval_f(f), sigma, e1, e2);
    Eigen::VectorXcd y;
    if (!detail::epsilon_solve(e1, e2, y)) return b;
    for (int q = 0; q < c.ntail; ++q) b.taps[static_cast<size_t>(q)] = std::conj(y[q]);
    return b;
}

namespace detail {

inline std::vector<cplx> optimal_w_values(const FomContext& c, const std::vector<cplx>& bigF,
                                          const std::vector<cplx>& bigB, double sigma) {
    std::vector<cplx> w(static_cast<size_t>(c.n));
    for (int k = 0; k < c.n; ++k) {
        const size_t sk = static_cast<size_t>(k);
        cplx bf = bigF[sk];
        if (std::abs(bf) < 1e-8) {  // the optimized F is generically nonzero; clamp stray grid points
            bf = (std::abs(bf) == 0.0) ? cplx{1e-8, 0.0} : bf * (1e-8 / std::abs(bf));
        }
        const double p = std::norm(bigF[sk]);
        w[sk] = std::conj(c.h[sk]) * (1.0 + p + sigma * std::conj(bf) * bigB[sk]) / (std::conj(bf) * c.s[sk]);
    }
    return w;
}

}  // namespace detail

// Optimal prefilter for given (f, b), truncated to a two-sided FIR.
// When loss_out is null, a truncation that moves the rate by more than 1e-4
// relative is reported as an error; otherwise the loss is written out.
inline TapVector optimal_w(const TapVector& f, const TapVector& b, const Cir& cir, double sigma,
                           const FrequencyGrid& grid, int trunc_len, double* loss_out = nullptr) {
    if (trunc_len < 1 || trunc_len > grid.n_points)
        throw std::invalid_argument("optimal_w: trunc_len must be in [1, grid size]");
    detail::FomContext c(cir, static_cast<int>(f.size()) - 1, grid);
    Spectrum ws;
    ws.grid = grid;
    ws.values = detail::optimal_w_values(c, c.eval_f(f), dtft(b, grid).values, sigma);
    const int half = (trunc_len - 1) / 2;
    TapVector w = idtft(ws, -half, trunc_len - 1 - half);

    const double exact = milb_general(ws, f, b, cir, sigma);
    const double truncated = milb_general(w, f, b, cir, sigma, grid);
    const double loss = std::abs(exact - truncated) / std::max(std::abs(exact), 1e-12);
    if (loss_out) {
        *loss_out = loss;
    } else if (loss > 1e-4) {
        throw std::runtime_error("optimal_w: truncation changes the rate by " + std::to_string(loss) +
                                 " relative (> 1e-4); increase trunc_len");
    }
    return w;
}

// ---------------------------------------------------------------------------
// FOM target-response optimization
// ---------------------------------------------------------------------------

struct FomOptions {
    int grid_points = kDesignGridPoints;
    int max_iters = 50;
    double rel_tol = 1e-9;        // stop when the relative rate improvement falls below this
    double armijo = 1e-4;
    int trunc_len = kPrefilterLen;
    std::optional<TapVector> f_init;  // defaults to the homomorphic target response h_f
    int minphase_fft = 8192;
};

// Gradient ascent on f (Eq-style f += grad step) accelerated with a damped
// Newton direction; accepted iterates never decrease the rate.
inline FomFilters optimize_fom(const Cir& cir, int nu, double sigma, const FomOptions& opt = {}) {
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw std::invalid_argument("optimize_fom: sigma must be in [0,1]");
    const FrequencyGrid grid = FrequencyGrid::make(opt.grid_points);
    detail::FomContext c(cir, nu, grid);

    TapVector f;
    if (opt.f_init) {
        f = *opt.f_init;
        if (f.size() != nu + 1 || f.origin != 0)
            throw std::invalid_argument("optimize_fom: f_init must hold nu+1 causal taps");
    } else {
        MinPhaseOptions mpo;
        mpo.fft_size = std::max(opt.minphase_fft, 16 * cir.length());
        while (!detail::is_pow2(mpo.fft_size)) ++mpo.fft_size;
        mpo.allpass_tol = 1e30;  // only h_tilde is needed for the initialization
        f = split_target(min_phase(cir, mpo).h_tilde, nu).first;
    }

    const int nf = nu + 1;
    double rate = detail::theorem1_rate_ctx(c, c.eval_f(f), sigma);
    FomFilters out;
    out.sigma = sigma;
    out.milb_history.push_back(rate);
    out.converged = false;

    for (int it = 0; it < opt.max_iters; ++it) {
        const std::vector<cplx> g = detail::fom_gradient_ctx(c, c.eval_f(f), sigma);
        // Real parameterization theta = (Re f, Im f); gradient is 2*(Re g, Im g).
        Eigen::VectorXd gr(2 * nf);
        for (int i = 0; i < nf; ++i) {
            gr[i] = 2.0 * g[static_cast<size_t>(i)].real();
            gr[nf + i] = 2.0 * g[static_cast<size_t>(i)].imag();
        }
        // Curvature from central differences of the analytic gradient.
        Eigen::MatrixXd hess(2 * nf, 2 * nf);
        const double fd = 1e-6;
        for (int col = 0; col < 2 * nf; ++col) {
            TapVector fp = f, fm = f;
            const int i = col % nf;
            const cplx dir = (col < nf) ? cplx{fd, 0.0} : cplx{0.0, fd};
            fp.taps[static_cast<size_t>(i)] += dir;
            fm.taps[static_cast<size_t>(i)] -= dir;
            const auto gp = detail::fom_gradient_ctx(c, c.eval_f(fp), sigma);
            const auto gm = detail::fom_gradient_ctx(c, c.eval_f(fm), sigma);
            for (int r = 0; r < nf; ++r) {
                hess(r, col) = (gp[static_cast<size_t>(r)].real() - gm[static_cast<size_t>(r)].real()) / fd;
                hess(nf + r, col) = (gp[static_cast<size_t>(r)].imag() - gm[static_cast<size_t>(r)].imag()) / fd;
            }
        }
        hess = 0.5 * (hess + hess.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-hess);
        const double lmin = es.eigenvalues().minCoeff();
        const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
        const double tau = (lmin <= 1e-12) ? (-lmin + std::max(1e-8, 1e-6 * lmax)) : 0.0;
        Eigen::VectorXd dir =
            (-hess + tau * Eigen::MatrixXd::Identity(2 * nf, 2 * nf)).ldlt().solve(gr);
        double slope = dir.dot(gr);
        if (!(slope > 0.0)) {  // fall back to plain steepest ascent
            dir = gr;
            slope = gr.squaredNorm();
        }
        if (slope <= 0.0) break;

        double step = 1.0;
        bool accepted = false;
        TapVector fn = f;
        double rate_n = rate;
        while (step > 1e-14) {
            for (int i = 0; i < nf; ++i)
                fn.taps[static_cast<size_t>(i)] =
                    f.taps[static_cast<size_t>(i)] + step * cplx(dir[i], dir[nf + i]);
            rate_n = detail::theorem1_rate_ctx(c, c.eval_f(fn), sigma);
            if (rate_n >= rate + opt.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            out.converged = true;  // no ascent step exists at line-search resolution
            break;
        }
        const double improvement = rate_n - rate;
        f = fn;
        rate = rate_n;
        out.milb_history.push_back(rate);
        out.iterations = it + 1;
        if (improvement <= opt.rel_tol * std::max(1.0, std::abs(rate))) {
            out.converged = true;
            break;
        }
    }

    out.f = f;
    out.b = optimal_b(f, cir, sigma, grid);
    double loss = 0.0;
    out.w = optimal_w(f, out.b, cir, sigma, grid, opt.trunc_len, &loss);
    out.w_truncation_warning = loss > 1e-4;
    out.milb = detail::theorem1_rate_ctx(c, c.eval_f(f), sigma);
    return out;
}

// ---------------------------------------------------------------------------
// UBM design
// ---------------------------------------------------------------------------

// G(w) = g_0 + 2*Re{ sum_{k>=1} g_k e^{jkw} }, g_0 real.
inline std::vector<double> ubm_g_values(const TapVector& g, const FrequencyGrid& grid) {
    std::vector<double> out(static_cast<size_t>(grid.n_points));
    for (int k = 0; k < grid.n_points; ++k) {
        const double w = grid.omegas[static_cast<size_t>(k)];
        double v = g.taps.empty() ? 0.0 : g.taps[0].real();
        for (int i = 1; i < g.size(); ++i) {
            const cplx e(std::cos(i * w), std::sin(i * w));
            v += 2.0 * std::real(g.taps[static_cast<size_t>(i)] * e);
        }
        out[static_cast<size_t>(k)] = v;
    }
    return out;
}

inline double ubm_rate(const TapVector& g, const Cir& cir, const FrequencyGrid& grid) {
    const std::vector<double> gv = ubm_g_values(g, grid);
    const Spectrum ms = m_spectrum(cir, grid);
    double acc = 0.0;
    for (int k = 0; k < grid.n_points; ++k) {
        const double one_plus_g = 1.0 + gv[static_cast<size_t>(k)];
        if (!(one_plus_g > 0.0)) throw std::runtime_error("ubm_rate: 1 + G(w) must stay positive");
        acc += std::log(one_plus_g) + ms.values[static_cast<size_t>(k)].real() * one_plus_g;
    }
    return 1.0 + acc / grid.n_points;
}

struct UbmOptions {
    int grid_points = kDesignGridPoints;
    int max_iters = 300;
    double grad_tol = 1e-12;
    double domain_margin = 1e-9;  // keep 1 + G(w) >= this
    int trunc_len = kPrefilterLen;
};

// Concave maximization of the Ungerboeck-model rate by damped Newton ascent.
// At the optimum the stationarity identity mean(M*(1+G)) = -1 holds; the
// residual is reported for verification.
inline UbmFilters optimize_ubm(const Cir& cir, int nu, const UbmOptions& opt = {}) {
    const FrequencyGrid grid = FrequencyGrid::make(opt.grid_points);
    detail::FomContext c(cir, nu, grid);
    const int np = 2 * nu + 1;  // g0, Re g_k, Im g_k
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(np);

    // Basis functions dG/dtheta on the grid.
    Eigen::MatrixXd basis(np, c.n);
    for (int k = 0; k < c.n; ++k) {
        const double w = grid.omegas[static_cast<size_t>(k)];
        basis(0, k) = 1.0;
        for (int i = 1; i <= nu; ++i) {
            basis(2 * i - 1, k) = 2.0 * std::cos(i * w);
            basis(2 * i, k) = -2.0 * std::sin(i * w);
        }
    }
    auto g_values = [&](const Eigen::VectorXd& th) {
        Eigen::VectorXd gv = Eigen::VectorXd::Zero(c.n);
        for (int p = 0; p < np; ++p) gv += th[p] * basis.row(p).transpose();
        return gv;
    };
    auto rate_of = [&](const Eigen::VectorXd& gv) {
        double acc = 0.0;
        for (int k = 0; k < c.n; ++k) acc += std::log(1.0 + gv[k]) + c.m[static_cast<size_t>(k)] * (1.0 + gv[k]);
        return 1.0 + acc / c.n;
    };

    Eigen::VectorXd gv = g_values(theta);
    double rate = rate_of(gv);
    bool converged = false;
    int used = 0;
    for (int it = 0; it < opt.max_iters; ++it) {
        Eigen::VectorXd sfun(c.n);
        for (int k = 0; k < c.n; ++k) sfun[k] = 1.0 / (1.0 + gv[k]) + c.m[static_cast<size_t>(k)];
        const Eigen::VectorXd grad = basis * sfun / c.n;
        if (grad.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
            converged = true;
            break;
        }
        Eigen::VectorXd wgt(c.n);
        for (int k = 0; k < c.n; ++k) wgt[k] = 1.0 / ((1.0 + gv[k]) * (1.0 + gv[k]));
        const Eigen::MatrixXd hess_neg = basis * wgt.asDiagonal() * basis.transpose() / c.n;  // = -Hessian, PD
        Eigen::VectorXd dir = hess_neg.ldlt().solve(grad);
        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd gv2;
        while (step > 1e-14) {
            const Eigen::VectorXd th2 = theta + step * dir;
            gv2 = g_values(th2);
            if (gv2.minCoeff() > -1.0 + opt.domain_margin) {
                const double r2 = rate_of(gv2);
                if (r2 >= rate - 1e-15) {
                    theta = th2;
                    rate = r2;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        used = it + 1;
        if (!accepted) break;
        gv = gv2;
    }
    if (!converged) throw std::runtime_error("optimize_ubm: Newton ascent failed to reach stationarity");

    UbmFilters out;
    out.iterations = used;
    out.g.origin = 0;
    out.g.taps.resize(static_cast<size_t>(nu + 1));
    out.g.taps[0] = cplx(theta[0], 0.0);
    for (int i = 1; i <= nu; ++i) out.g.taps[static_cast<size_t>(i)] = cplx(theta[2 * i - 1], theta[2 * i]);

    double gm3 = 0.0;
    for (int k = 0; k < c.n; ++k) gm3 += c.m[static_cast<size_t>(k)] * (1.0 + gv[k]);
    out.gm3_residual = gm3 / c.n;
    out.milb = rate;

    // V_opt(w) = H^*(w) (1 + G(w)) / (N0 + |H(w)|^2), truncated like w.
    Spectrum vs;
    vs.grid = grid;
    vs.values.resize(static_cast<size_t>(c.n));
    for (int k = 0; k < c.n; ++k) {
        const size_t sk = static_cast<size_t>(k);
        vs.values[sk] = std::conj(c.h[sk]) * (1.0 + gv[k]) / c.s[sk];
    }
    const int half = (opt.trunc_len - 1) / 2;
    out.v = idtft(vs, -half, opt.trunc_len - 1 - half);
    return out;
}

// ---------------------------------------------------------------------------
// HOM design and sigma selection
// ---------------------------------------------------------------------------

inline HomFilters design_hom(const Cir& cir, int nu, const MinPhaseOptions& opt = {}) {
    const MinPhaseResult mp = min_phase(cir, opt);
    auto [h_f, h_b] = split_target(mp.h_tilde, nu);
    HomFilters out;
    out.w_hom = mp.w_hom;
    out.h_f = std::move(h_f);
    out.h_b = std::move(h_b);
    out.allpass_dev = mp.allpass_dev;
    return out;
}

// Exact-magnitude all-pass prefilter spectrum of a HOM design, for rate
// evaluations that must not inherit FIR truncation error.
inline Spectrum hom_w_spectrum(const HomFilters& hom, const Cir& cir, const FrequencyGrid& grid) {
    const Spectrum hs = dtft(cir.h, grid);
    TapVector scaled = hom.h_f;
    const TapVector full = add_aligned(hom.h_f, hom.h_b);
    const Spectrum hts = dtft(full, grid);
    Spectrum w;
    w.grid = grid;
    w.values.resize(hs.values.size());
    const double inv_sqrt_n0 = 1.0 / std::sqrt(cir.n0);
    for (size_t k = 0; k < hs.values.size(); ++k) {
        const cplx r = hts.values[k] * std::conj(hs.values[k]);
        const double mag = std::abs(r);
        w.values[k] = (mag > 1e-300 ? r / mag : cplx{1.0, 0.0}) * inv_sqrt_n0;
    }
    return w;
}

struct SigmaSelection {
    bool use_fom = true;   // false selects the UBM shortener
    double sigma = 1.0;    // design sigma when use_fom
    double advisory_sigma_bound = std::numeric_limits<double>::quiet_NaN();  // 1 - delta_mse/2
};

// Code-rate rule: above the threshold use FOM designed for sigma = 1,
// otherwise the UBM shortener. delta_mse, when supplied, yields the
// advisory lower bound on sigma.
inline SigmaSelection select_sigma(double code_rate, double delta_mse = std::numeric_limits<double>::quiet_NaN(),
                                   double threshold = 0.5) {
    if (!(code_rate > 0.0 && code_rate < 1.0)) throw std::invalid_argument("select_sigma: code_rate in (0,1)");
    SigmaSelection s;
    s.use_fom = code_rate > threshold;
    s.sigma = s.use_fom ? 1.0 : 0.0;
    if (!std::isnan(delta_mse)) s.advisory_sigma_bound = 1.0 - delta_mse / 2.0;
    return s;
}

}  // namespace isikit
