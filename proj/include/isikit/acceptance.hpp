#pragma once

// Acceptance criteria, runnable both from the test suite and from the CLI
// `verify` subcommand. Each criterion returns a pass flag plus a one-line
// detail string; thresholds are fixed here, not configurable.

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "isikit/equalizer.hpp"
#include "isikit/rates.hpp"
#include "isikit/sim.hpp"

namespace isikit {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    bool quick = false;  // reduced Monte Carlo scale for interactive runs
    int threads = 0;
    bool monte_carlo = true;  // include the long Monte Carlo criteria (7-9)
};

namespace acceptance {

// ---- criterion 1: analytic gradient vs central finite differences ---------

inline CriterionResult gradient_oracle() {
    CriterionResult r{1, "gradient matches finite differences", false, "", 0.0};
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double snrs[] = {5.0, 10.0, 15.0};
    const double sigmas[] = {0.0, 0.5, 1.0};
    double worst = 0.0;
    for (StdChannel ch : {StdChannel::Epr4, StdChannel::ProakisC}) {
        for (int trial = 0; trial < 50; ++trial) {
            const double snr = snrs[trial % 3];
            const double sigma = sigmas[(trial / 3) % 3];
            const int nu = 1 + (trial % 2);
            const Cir cir = standard_channel(ch, n0_from_snr_db(snr));
            const FrequencyGrid grid = FrequencyGrid::make(1024);
            TapVector f;
            f.taps.resize(static_cast<size_t>(nu) + 1);
            for (auto& t : f.taps) t = cplx(gauss(rng), gauss(rng));
            const std::vector<cplx> ga = fom_gradient(f, cir, sigma, grid);
            double gmax = 0.0;
            for (const auto& g : ga) gmax = std::max(gmax, std::abs(g));
            const double h = 1e-5;
            for (size_t k = 0; k < ga.size(); ++k) {
                double parts[2];
                for (int im = 0; im < 2; ++im) {
                    TapVector fp = f, fm = f;
                    const cplx d = im ? cplx{0.0, h} : cplx{h, 0.0};
                    fp.taps[k] += d;
                    fm.taps[k] -= d;
                    parts[im] = (theorem1_rate(fp, cir, sigma, grid) - theorem1_rate(fm, cir, sigma, grid)) / (2 * h);
                }
                const cplx fd = cplx(parts[0], parts[1]) / 2.0;  // dI/df* from real/imag slopes
                worst = std::max(worst, std::abs(ga[k] - fd) / std::max(gmax, 1e-300));
            }
        }
    }
    r.pass = worst < 1e-5;
    std::ostringstream os;
    os << "max relative component error " << worst << " (< 1e-5)";
    r.detail = os.str();
    return r;
}

// ---- criterion 2: Lemma-1 / Theorem-1 consistency --------------------------

inline CriterionResult theorem1_consistency() {
    CriterionResult r{2, "milb_general(optimal w,b) matches theorem1_rate", false, "", 0.0};
    std::mt19937_64 rng(23);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sigmas[] = {0.0, 0.5, 1.0};
    double worst = 0.0;
    for (StdChannel ch : {StdChannel::Epr4, StdChannel::ProakisC}) {
        const Cir cir = standard_channel(ch, 0.1);
        const FrequencyGrid grid = FrequencyGrid::make(1024);
        for (int trial = 0; trial < 20; ++trial) {
            const double sigma = sigmas[trial % 3];
            const int nu = 1 + (trial % 2);
            TapVector f;
            f.taps.resize(static_cast<size_t>(nu) + 1);
            for (auto& t : f.taps) t = cplx(gauss(rng), gauss(rng));
            const TapVector b = optimal_b(f, cir, sigma, grid);
            // Full-length truncation reproduces W exactly on the grid, so this
            // isolates the Lemma-1 vs Theorem-1 algebra.
            const TapVector w = optimal_w(f, b, cir, sigma, grid, grid.n_points, nullptr);
            const double lhs = milb_general(w, f, b, cir, sigma, grid);
            const double rhs = theorem1_rate(f, cir, sigma, grid);
            worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-12));
        }
    }
    r.pass = worst < 1e-8;
    std::ostringstream os;
    os << "max relative mismatch " << worst << " (< 1e-8)";
    r.detail = os.str();
    return r;
}

// ---- criteria 3 + 4: rate-inequality suite and UBM stationarity ------------

struct RateSweepOutcome {
    double worst_slack = 0.0;      // most negative inequality slack observed
    std::string worst_name;
    double worst_gm3 = 0.0;        // max |mean(M(1+G)) + 1|
    int points = 0;
};

inline RateSweepOutcome rate_sweep() {
    RateSweepOutcome out;
    std::vector<std::pair<std::string, ChannelSpec>> channels;
    {
        ChannelSpec s;
        s.kind = ChannelSpec::Kind::Preset;
        s.preset = "epr4";
        channels.emplace_back("epr4", s);
        s.preset = "proakis_c";
        channels.emplace_back("proakis_c", s);
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            ChannelSpec rs;
            rs.kind = ChannelSpec::Kind::Random;
            rs.random_length = 5;
            rs.random_seed = seed;
            channels.emplace_back("iid5_seed" + std::to_string(seed), rs);
        }
    }
    const FrequencyGrid grid = FrequencyGrid::make(kRateGridPoints);
    auto note = [&](const std::string& name, double slack) {
        if (slack < out.worst_slack) {
            out.worst_slack = slack;
            out.worst_name = name;
        }
    };
    for (const auto& [name, spec] : channels) {
        RateReport prev;
        bool have_prev = false;
        for (int snr = 0; snr <= 20; snr += 2) {
            const Cir cir = spec.realize(n0_from_snr_db(snr));
            const RateReport rep = rate_report(cir, 1);
            const std::string tag = name + "@" + std::to_string(snr) + "dB ";
            note(tag + "i_hom_l<=i_hom_u", rep.i_hom_u - rep.i_hom_l);
            note(tag + "i_hom<=i_fom0", rep.i_fom0 - rep.i_hom);
            note(tag + "i_fom0<=i_ubm", rep.i_ubm - rep.i_fom0);
            note(tag + "i_ubm<=capacity", rep.c - rep.i_ubm);
            note(tag + "i_hom_u<=i_fom1", rep.i_fom1 - rep.i_hom_u);
            note(tag + "fig10_ratio<=1", 1.0 - rep.i_fom0 / rep.i_ubm);
            note(tag + "corollary<=1", 1.0 - corollary_check(cir, 1, grid));
            UbmOptions uo;
            uo.grid_points = kRateGridPoints;
            const UbmFilters ubm = optimize_ubm(cir, 1, uo);
            out.worst_gm3 = std::max(out.worst_gm3, std::abs(ubm.gm3_residual + 1.0));
            if (have_prev) {
                note(tag + "capacity_monotone", rep.c - prev.c);
                note(tag + "i_fom0_monotone", rep.i_fom0 - prev.i_fom0);
                note(tag + "i_fom1_monotone", rep.i_fom1 - prev.i_fom1);
                note(tag + "i_ubm_monotone", rep.i_ubm - prev.i_ubm);
                note(tag + "i_hom_l_monotone", rep.i_hom_l - prev.i_hom_l);
                note(tag + "i_hom_u_monotone", rep.i_hom_u - prev.i_hom_u);
            }
            prev = rep;
            have_prev = true;
            ++out.points;
        }
    }
    return out;
}

inline std::pair<CriterionResult, CriterionResult> rate_inequalities_and_stationarity() {
    CriterionResult r3{3, "rate-inequality suite over the channel/SNR sweep", false, "", 0.0};
    CriterionResult r4{4, "UBM stationarity identity mean(M(1+G)) = -1", false, "", 0.0};
    const RateSweepOutcome out = rate_sweep();
    r3.pass = out.worst_slack >= -1e-9;
    {
        std::ostringstream os;
        os << out.points << " sweep points; worst slack " << out.worst_slack;
        if (!out.worst_name.empty()) os << " at " << out.worst_name;
        os << " (>= -1e-9)";
        r3.detail = os.str();
    }
    r4.pass = out.worst_gm3 < 1e-6;
    {
        std::ostringstream os;
        os << "max |residual + 1| = " << out.worst_gm3 << " (< 1e-6)";
        r4.detail = os.str();
    }
    return {r3, r4};
}

// ---- criterion 5: brute-force max-log oracle --------------------------------

inline CriterionResult equalizer_bruteforce() {
    CriterionResult r{5, "RS-SOVE equals exhaustive max-log enumeration", false, "", 0.0};
    const int num_k = 8, d = 8;
    const Modulation mod = make_modulation(ModScheme::Bpsk);
    double worst = 0.0;
    for (uint64_t seed = 101; seed < 111; ++seed) {
        const Cir cir = random_iid_channel(3, seed, n0_from_snr_db(6.0));
        const int len = cir.length();

        FomFilters filt;  // identity prefilter, target = channel, no feedback
        filt.w = TapVector({cplx{1.0, 0.0}}, 0);
        filt.f = cir.h;
        filt.b = TapVector{};
        filt.b.origin = -len;
        filt.sigma = 0.0;

        TrellisConfig tc;
        tc.nu = len - 1;
        tc.d = d;
        tc.modulation = mod;
        tc.metric = MetricKind::ForneyFeedback;
        tc.llr_clamp = 1e12;

        std::mt19937_64 rng(detail::mix64(seed ^ 0xabcdef));
        std::vector<uint8_t> bits(num_k);
        std::bernoulli_distribution coin(0.5);
        for (auto& b : bits) b = coin(rng) ? 1 : 0;
        auto [x, y] = transmit(bits, mod, cir, rng);
        const LlrFrame frame = equalize(y, filt, tc, num_k);

        // Exhaustive reference with the same per-stage metric and the same
        // observation horizon min(k + D, T-1) per output bit.
        const int stages = num_k + len - 1;
        std::vector<std::vector<double>> gam(static_cast<size_t>(1 << num_k),
                                             std::vector<double>(static_cast<size_t>(stages)));
        for (int s = 0; s < (1 << num_k); ++s) {
            std::vector<cplx> xs(static_cast<size_t>(num_k));
            for (int k = 0; k < num_k; ++k) xs[static_cast<size_t>(k)] = mod.points[(s >> k) & 1];
            for (int t = 0; t < stages; ++t) {
                cplx rsum = y[static_cast<size_t>(t)];
                for (int l = 0; l < len; ++l) {
                    const int pos = t - l;
                    if (pos >= 0 && pos < num_k) rsum -= cir.h.taps[static_cast<size_t>(l)] * xs[static_cast<size_t>(pos)];
                }
                gam[static_cast<size_t>(s)][static_cast<size_t>(t)] = std::norm(rsum);
            }
        }
        for (int k = 0; k < num_k; ++k) {
            const int horizon = std::min(k + d, stages - 1);
            double best0 = detail::kInf, best1 = detail::kInf;
            for (int s = 0; s < (1 << num_k); ++s) {
                double metric = 0.0;
                for (int t = 0; t <= horizon; ++t) metric += gam[static_cast<size_t>(s)][static_cast<size_t>(t)];
                if ((s >> k) & 1) best1 = std::min(best1, metric);
                else best0 = std::min(best0, metric);
            }
            worst = std::max(worst, std::abs(frame.at(k, 0) - (best0 - best1)));
        }
    }
    r.pass = worst < 1e-10;
    std::ostringstream os;
    os << "max |LLR - enumeration| = " << worst << " (< 1e-10)";
    r.detail = os.str();
    return r;
}

// ---- criterion 6: FOM convergence speed -------------------------------------

inline CriterionResult fom_convergence() {
    CriterionResult r{6, "FOM ascent converges within 10 iterations", false, "", 0.0};
    int worst_iters = 0;
    std::string worst_case;
    for (StdChannel ch : {StdChannel::Epr4, StdChannel::ProakisC}) {
        for (double snr : {10.0, 12.0, 14.0, 16.0}) {
            for (double sigma : {0.5, 1.0}) {
                const Cir cir = standard_channel(ch, n0_from_snr_db(snr));
                const FomFilters f = optimize_fom(cir, 1, sigma);
                const auto& hist = f.milb_history;
                int conv = -1;
                for (size_t i = 1; i < hist.size(); ++i) {
                    if (std::abs(hist[i] - hist[i - 1]) <= 1e-6 * std::max(1.0, std::abs(hist[i]))) {
                        conv = static_cast<int>(i);
                        break;
                    }
                }
                if (conv < 0) conv = 1000;
                if (conv > worst_iters) {
                    worst_iters = conv;
                    worst_case = std::string(ch == StdChannel::Epr4 ? "epr4" : "proakis_c") + "@" +
                                 std::to_string(static_cast<int>(snr)) + "dB sigma=" + std::to_string(sigma);
                }
            }
        }
    }
    r.pass = worst_iters <= 10;
    std::ostringstream os;
    os << "worst case " << worst_iters << " iterations (" << worst_case << ", <= 10)";
    r.detail = os.str();
    return r;
}

// ---- criterion 7: decision-delay gain ---------------------------------------

inline CriterionResult delay_gain(const AcceptanceOptions& opt) {
    CriterionResult r{7, "delay gain at normalized MI 0.5 (EPR-4, 16QAM, HOM)", false, "", 0.0};
    SimConfig cfg;
    cfg.channel.kind = ChannelSpec::Kind::Preset;
    cfg.channel.preset = "epr4";
    cfg.shortener = ShortenerKind::Hom;
    cfg.modulation = "16qam";
    cfg.nu = 1;
    cfg.block_len = 1064;
    cfg.n_blocks = opt.quick ? 60 : 700;
    cfg.seed = 7;
    cfg.threads = opt.threads;
    // Anchors bracket the normalized-MI-0.5 crossing (about 17.7..18 dB);
    // all delays share block seeds, so the gain is a paired comparison.
    cfg.snr_db = {17.3, 17.7, 18.1, 18.5};
    const int len = 4;
    const std::vector<int> dvals = {len - 1, len + 2, len + 20};
    const auto sweeps = delay_sweep(cfg, dvals);
    double worst_se = 0.0;
    for (const auto& sw : sweeps)
        for (const auto& p : sw.points) worst_se = std::max(worst_se, p.se_mi / 4.0);
    const double snr_d0 = snr_at_normalized_mi(sweeps[0].points, 0.5);
    const double snr_d1 = snr_at_normalized_mi(sweeps[1].points, 0.5);
    const double snr_d2 = snr_at_normalized_mi(sweeps[2].points, 0.5);
    const double gain_small = snr_d0 - snr_d1;   // L-1 -> L+2
    const double gain_large = snr_d1 - snr_d2;   // L+2 -> L+20
    const bool se_ok = opt.quick || worst_se < 0.005;
    r.pass = se_ok && std::abs(gain_small - 0.4) <= 0.2 && gain_large < 0.15;
    std::ostringstream os;
    os << "gain(L-1 -> L+2) = " << gain_small << " dB (0.4 +/- 0.2), gain(L+2 -> L+20) = " << gain_large
       << " dB (< 0.15), max normalized-MI SE " << worst_se;
    r.detail = os.str();
    return r;
}

// ---- criterion 8: sigma_in -> sigma_out experiment --------------------------

inline CriterionResult sigma_experiment_check(const AcceptanceOptions& opt) {
    CriterionResult r{8, "sigma experiment (EPR-4, 8PSK)", false, "", 0.0};
    SimConfig cfg;
    cfg.channel.kind = ChannelSpec::Kind::Preset;
    cfg.channel.preset = "epr4";
    cfg.modulation = "8psk";
    cfg.nu = 1;
    cfg.block_len = 1064;
    cfg.n_blocks = opt.quick ? 60 : 800;
    cfg.seed = 8;
    cfg.threads = opt.threads;
    std::vector<double> sgrid;
    for (int i = 0; i <= 10; ++i) sgrid.push_back(i / 10.0);
    // The low point sits at the sigma crossover: the largest SNR region where
    // feedback-free design remains near-optimal while the best-point SER
    // stays inside [1e-3, 0.3].
    const double snr_high = 16.0, snr_low = 11.7;

    auto best_of = [](const std::vector<SigmaPoint>& pts) {
        double m = -1.0;
        for (const auto& p : pts) m = std::max(m, p.sigma_out);
        return m;
    };
    const auto hi = sigma_experiment(cfg, snr_high, sgrid);
    const auto lo = sigma_experiment(cfg, snr_low, sgrid);
    const double hi_best = best_of(hi), lo_best = best_of(lo);
    const double hi_at_1 = hi.back().sigma_out;
    const double lo_at_0 = lo.front().sigma_out;
    const double hi_ser_best = 1.0 - hi_best, lo_ser_best = 1.0 - lo_best;
    const bool precondition = hi_ser_best >= 1e-3 && hi_ser_best <= 0.3 && lo_ser_best >= 1e-3 && lo_ser_best <= 0.3;
    r.pass = precondition && (hi_at_1 >= hi_best - 0.01) && (lo_at_0 >= lo_best - 0.01);
    std::ostringstream os;
    os << "high SNR " << snr_high << " dB: sigma_out(1) = " << hi_at_1 << " vs max " << hi_best << "; low SNR "
       << snr_low << " dB: sigma_out(0) = " << lo_at_0 << " vs max " << lo_best << "; best-point SER " << hi_ser_best
       << " / " << lo_ser_best << " (in [1e-3, 0.3])";
    r.detail = os.str();
    return r;
}

// ---- criterion 9: measured-MI crossover -------------------------------------

inline CriterionResult mi_crossover(const AcceptanceOptions& opt) {
    CriterionResult r{9, "measured-MI ordering FOM(sigma=1) vs UBM (Proakis-C, 16QAM)", false, "", 0.0};
    SimConfig cfg;
    cfg.channel.kind = ChannelSpec::Kind::Preset;
    cfg.channel.preset = "proakis_c";
    cfg.modulation = "16qam";
    cfg.nu = 1;
    cfg.block_len = 1064;
    cfg.n_blocks = opt.quick ? 40 : 200;
    cfg.seed = 9;
    cfg.threads = opt.threads;
    // UBM spends roughly 20..29 dB inside the excluded (0.4, 0.6) band; the
    // high-band points therefore sit where its error floor has flattened out.
    const std::vector<double> snrs = {4.0, 8.0, 12.0, 16.0, 30.0, 32.0, 34.0};

    SimConfig fom_cfg = cfg;
    fom_cfg.shortener = ShortenerKind::Fom;
    fom_cfg.sigma = 1.0;
    SimConfig ubm_cfg = cfg;
    ubm_cfg.shortener = ShortenerKind::Ubm;

    bool ok = true;
    int checked_hi = 0, checked_lo = 0;
    std::ostringstream os;
    for (double snr : snrs) {
        const PointResult pf = run_point(fom_cfg, snr);
        const PointResult pu = run_point(ubm_cfg, snr);
        const double se = std::sqrt(pf.se_mi * pf.se_mi + pu.se_mi * pu.se_mi);
        if (pf.mi_norm > 0.6 && pu.mi_norm > 0.6) {
            ++checked_hi;
            if (!(pf.mi_bits - pu.mi_bits >= 2.0 * se)) ok = false;
            os << "[hi " << snr << "dB fom " << pf.mi_norm << " ubm " << pu.mi_norm << " gap "
               << pf.mi_bits - pu.mi_bits << " 2se " << 2 * se << "] ";
        } else if (pf.mi_norm < 0.4 && pu.mi_norm < 0.4) {
            ++checked_lo;
            if (!(pu.mi_bits - pf.mi_bits >= 2.0 * se)) ok = false;
            os << "[lo " << snr << "dB fom " << pf.mi_norm << " ubm " << pu.mi_norm << " gap "
               << pu.mi_bits - pf.mi_bits << " 2se " << 2 * se << "] ";
        }
    }
    r.pass = ok && checked_hi >= 1 && checked_lo >= 1;
    os << checked_lo << " low-band + " << checked_hi << " high-band qualifying points";
    r.detail = os.str();
    return r;
}

// ---- criterion 10: minimum-phase invariance ---------------------------------

inline CriterionResult minphase_invariance() {
    CriterionResult r{10, "FOM(sigma=0) and UBM rates invariant under min-phase transform", false, "", 0.0};
    std::vector<ChannelSpec> specs;
    {
        ChannelSpec s;
        s.kind = ChannelSpec::Kind::Preset;
        s.preset = "epr4";
        specs.push_back(s);
        s.preset = "proakis_c";
        specs.push_back(s);
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            ChannelSpec rs;
            rs.kind = ChannelSpec::Kind::Random;
            rs.random_length = 5;
            rs.random_seed = seed;
            specs.push_back(rs);
        }
    }
    double worst = 0.0;
    for (const auto& spec : specs) {
        for (double snr : {0.0, 10.0, 20.0}) {
            const Cir cir = spec.realize(n0_from_snr_db(snr));
            MinPhaseOptions mpo;
            mpo.fft_size = 65536;  // unit-circle nulls (EPR-4) need a fine cepstral grid
            mpo.allpass_tol = 1e30;
            const MinPhaseResult mp = min_phase(cir, mpo);
            TapVector hm = mp.h_tilde;
            for (auto& t : hm.taps) t *= std::sqrt(cir.n0);
            const Cir cir_min(hm, cir.n0);

            FomOptions fo;
            fo.grid_points = kRateGridPoints;
            fo.rel_tol = 1e-12;
            UbmOptions uo;
            uo.grid_points = kRateGridPoints;
            const double ubm_a = optimize_ubm(cir, 1, uo).milb;
            const double ubm_b = optimize_ubm(cir_min, 1, uo).milb;
            const double fom_a = optimize_fom(cir, 1, 0.0, fo).milb;
            const double fom_b = optimize_fom(cir_min, 1, 0.0, fo).milb;
            worst = std::max(worst, std::abs(ubm_a - ubm_b));
            worst = std::max(worst, std::abs(fom_a - fom_b));
        }
    }
    r.pass = worst < 1e-6;
    std::ostringstream os;
    os << "max |rate difference| = " << worst << " (< 1e-6)";
    r.detail = os.str();
    return r;
}

}  // namespace acceptance

inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt = {},
                                                   std::ostream* log = nullptr) {
    std::vector<CriterionResult> results;
    auto timed = [&](const std::function<CriterionResult()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult r = fn();
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (log) {
            (*log) << (r.pass ? "[PASS] " : "[FAIL] ") << "criterion " << r.id << ": " << r.name << " -- "
                   << r.detail << " (" << r.seconds << " s)\n";
            log->flush();
        }
        results.push_back(r);
    };
    timed(acceptance::gradient_oracle);
    timed(acceptance::theorem1_consistency);
    {
        const auto t0 = std::chrono::steady_clock::now();
        auto [r3, r4] = acceptance::rate_inequalities_and_stationarity();
        r3.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (CriterionResult* r : {&r3, &r4}) {
            if (log) {
                (*log) << (r->pass ? "[PASS] " : "[FAIL] ") << "criterion " << r->id << ": " << r->name << " -- "
                       << r->detail << "\n";
                log->flush();
            }
            results.push_back(*r);
        }
    }
    timed(acceptance::equalizer_bruteforce);
    timed(acceptance::fom_convergence);
    if (opt.monte_carlo) {
        timed([&] { return acceptance::delay_gain(opt); });
        timed([&] { return acceptance::sigma_experiment_check(opt); });
        timed([&] { return acceptance::mi_crossover(opt); });
    }
    timed(acceptance::minphase_invariance);
    return results;
}

}  // namespace isikit
