#pragma once

// Shannon capacity, LMMSE MSE, homomorphic-shortener rate bounds, and the
// combined per-SNR rate report.

#include <cmath>
#include <string>

#include "isikit/shortener.hpp"

namespace isikit {

// IID-Gaussian-input capacity of the ISI channel, nats/symbol.
inline double capacity(const Cir& cir, const FrequencyGrid& grid) {
    const Spectrum hs = dtft(cir.h, grid);
    double acc = 0.0;
    for (const auto& v : hs.values) acc += std::log1p(std::norm(v) / cir.n0);
    return acc / grid.n_points;
}

// Per-symbol MSE of the LMMSE estimator: -mean(M(w)).
inline double delta_mse(const Cir& cir, const FrequencyGrid& grid) {
    const Spectrum ms = m_spectrum(cir, grid);
    return -mean_integral(ms).real();
}

struct HomBounds {
    double lower = 0.0;  // feedback treated as noise
    double upper = 0.0;  // perfect feedback; may exceed capacity
};

// Rate bounds of the homomorphic shortener from the split target response
// (h_f, h_b already carry the 1/sqrt(N0) normalization).
inline HomBounds hom_bounds(const TapVector& h_f, const TapVector& h_b, const FrequencyGrid& grid) {
    const Spectrum fs = dtft(h_f, grid);
    const Spectrum bs = dtft(h_b, grid);
    HomBounds out;
    for (int k = 0; k < grid.n_points; ++k) {
        const double p = std::norm(fs.values[static_cast<size_t>(k)]);
        const double q = std::norm(bs.values[static_cast<size_t>(k)]);
        out.lower += std::log1p(p / (1.0 + q));
        out.upper += std::log1p(p);
    }
    out.lower /= grid.n_points;
    out.upper /= grid.n_points;
    return out;
}

// Left-hand side of the target-response inequality (callers assert <= 1):
// eps1^dag eps2^{-1} eps1 - mean(M*(1+|H_f|^2)) evaluated at sigma = 1, F = H_f.
inline double corollary_check(const Cir& cir, int nu, const FrequencyGrid& grid,
                              const MinPhaseOptions& mp_opt = {}) {
    MinPhaseOptions mpo = mp_opt;
    mpo.allpass_tol = 1e30;  // only the target split is needed here
    auto [h_f, h_b] = split_target(min_phase(cir, mpo).h_tilde, nu);
    (void)h_b;
    detail::FomContext c(cir, nu, grid);
    const std::vector<cplx> bigF = c.eval_f(h_f);
    double quad = 0.0;
    if (c.ntail > 0) {
        Eigen::VectorXcd e1;
        Eigen::MatrixXcd e2;
        detail::epsilon_raw(c, bigF, 1.0, e1, e2);
        Eigen::VectorXcd y;
        if (detail::epsilon_solve(e1, e2, y)) quad = -e1.dot(y).real();  // eps1^dag eps2^{-1} eps1
    }
    double mterm = 0.0;
    for (int k = 0; k < c.n; ++k)
        mterm += c.m[static_cast<size_t>(k)] * (1.0 + std::norm(bigF[static_cast<size_t>(k)]));
    mterm /= c.n;
    return quad - mterm;
}

struct RateReport {
    double snr_db = 0.0;
    double c = 0.0;        // Shannon capacity
    double i_hom_l = 0.0;  // HOM lower bound (feedback as noise)
    double i_hom = 0.0;    // no-feedback rate achieved at the HOM filters (diagnostic)
    double i_hom_u = 0.0;  // HOM upper bound (perfect feedback)
    double i_fom0 = 0.0;   // FOM optimum at sigma = 0
    double i_fom1 = 0.0;   // FOM optimum at sigma = 1
    double i_ubm = 0.0;    // UBM optimum
    double delta_mse = 0.0;

    static std::string csv_header() {
        return "snr_db,capacity_nats,i_hom_l,i_hom,i_hom_u,i_fom0,i_fom1,i_ubm,delta_mse";
    }
    std::string csv_row() const {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%.6g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g", snr_db, c,
                      i_hom_l, i_hom, i_hom_u, i_fom0, i_fom1, i_ubm, delta_mse);
        return buf;
    }
};

struct RateReportOptions {
    int grid_points = kRateGridPoints;
    int minphase_fft = 8192;
};

inline RateReport rate_report(const Cir& cir, int nu, const RateReportOptions& opt = {}) {
    const FrequencyGrid grid = FrequencyGrid::make(opt.grid_points);
    RateReport r;
    r.snr_db = -10.0 * std::log10(cir.n0);
    r.c = capacity(cir, grid);
    r.delta_mse = delta_mse(cir, grid);

    MinPhaseOptions mpo;
    mpo.fft_size = opt.minphase_fft;
    mpo.allpass_tol = 1e30;  // rate evaluation uses the exact all-pass spectrum
    const HomFilters hom = design_hom(cir, nu, mpo);
    const HomBounds hb = hom_bounds(hom.h_f, hom.h_b, grid);
    r.i_hom_l = hb.lower;
    r.i_hom_u = hb.upper;
    r.i_hom = milb_general(hom_w_spectrum(hom, cir, grid), hom.h_f, hom.h_b, cir, 0.0);

    FomOptions fo;
    fo.grid_points = opt.grid_points;
    fo.rel_tol = 1e-12;
    fo.f_init = hom.h_f;
    r.i_fom0 = optimize_fom(cir, nu, 0.0, fo).milb;
    r.i_fom1 = optimize_fom(cir, nu, 1.0, fo).milb;

    UbmOptions uo;
    uo.grid_points = opt.grid_points;
    r.i_ubm = optimize_ubm(cir, nu, uo).milb;
    return r;
}

}  // namespace isikit
