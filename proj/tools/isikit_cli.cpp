// Command-line front end: filter design, rate tables, Monte Carlo
// experiments, and the acceptance verifier. JSON configs in, CSV out.
//
// Exit codes: 0 success, 1 acceptance/inequality failure, 2 usage or
// configuration error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "isikit/acceptance.hpp"
#include "isikit/json_io.hpp"

namespace {

constexpr const char* kCsvVersion = "# isikit csv v1";

isikit::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    isikit::json j;
    in >> j;
    return j;
}

// Applies --set key=value overrides; dotted keys descend into objects and the
// value is parsed as JSON when possible, else taken as a string.
void apply_overrides(isikit::json& cfg, const std::vector<std::string>& sets) {
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        isikit::json* node = &cfg;
        std::istringstream ks(key);
        std::string part, prev;
        std::vector<std::string> parts;
        while (std::getline(ks, part, '.')) parts.push_back(part);
        for (size_t i = 0; i + 1 < parts.size(); ++i) node = &((*node)[parts[i]]);
        isikit::json parsed = isikit::json::parse(val, nullptr, false);
        (*node)[parts.back()] = parsed.is_discarded() ? isikit::json(val) : parsed;
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open output file '" + path + "'");
    return out;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        auto f = open_out(out_path);
        f << text;
    }
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Channel-shortener design and reduced-state soft-output Viterbi equalization"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_path;
    uint64_t seed = 0;
    bool seed_set = false;
    int grid_points = 0;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON config path")->capture_default_str();
    app.add_option("--out", out_path, "output path (stdout when omitted)");
    app.add_option("--seed", seed, "RNG seed override")->each([&](const std::string&) { seed_set = true; });
    app.add_option("--grid-points", grid_points, "frequency-grid size override");
    app.add_option("--set", overrides, "config override key=value (repeatable)");

    auto* design = app.add_subcommand("design", "design a channel shortener, JSON out");
    std::string shortener = "fom";
    int nu = 1;
    double sigma = 1.0;
    design->add_option("--shortener", shortener, "fom|ubm|hom")->capture_default_str();
    design->add_option("--nu", nu, "trellis memory after shortening")->capture_default_str();
    design->add_option("--sigma", sigma, "FOM feedback quality in [0,1]")->capture_default_str();

    auto* rates = app.add_subcommand("rates", "per-SNR rate report, CSV out");
    std::string snr_list = "0,2,4,6,8,10,12,14,16,18,20";
    rates->add_option("--nu", nu, "trellis memory")->capture_default_str();
    rates->add_option("--snr", snr_list, "comma-separated SNR list in dB")->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo SER/BER/MI sweep, CSV out");

    auto* sweep_sigma = app.add_subcommand("sweep-sigma", "sigma_in -> sigma_out experiment, CSV out");
    double sweep_snr = 12.0;
    std::string sigma_grid = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
    sweep_sigma->add_option("--snr", sweep_snr, "SNR in dB")->capture_default_str();
    sweep_sigma->add_option("--sigma-grid", sigma_grid, "comma-separated design sigmas")->capture_default_str();

    auto* sweep_delay = app.add_subcommand("sweep-delay", "MI vs SNR per decision delay, CSV out");
    std::string d_list = "3,6,24";
    double mi_target = 0.5;
    sweep_delay->add_option("--d", d_list, "comma-separated decision delays")->capture_default_str();
    sweep_delay->add_option("--mi-target", mi_target, "normalized MI level for the SNR read-off")
        ->capture_default_str();

    auto* verify = app.add_subcommand("verify", "run the acceptance criteria");
    bool quick = false, skip_mc = false;
    verify->add_flag("--quick", quick, "reduced Monte Carlo scale");
    verify->add_flag("--skip-montecarlo", skip_mc, "only the deterministic criteria");

    CLI11_PARSE(app, argc, argv);

    try {
        if (design->parsed()) {
            if (!(sigma >= 0.0 && sigma <= 1.0)) throw std::invalid_argument("sigma must lie in [0,1]");
            isikit::json cfg = load_json(config_path);
            apply_overrides(cfg, overrides);
            auto [spec, n0] = isikit::channel_spec_from_json(cfg);
            const isikit::Cir cir = spec.realize(n0);
            isikit::json out;
            const auto kind = isikit::shortener_kind_from(shortener);
            if (kind == isikit::ShortenerKind::Fom) {
                isikit::FomOptions fo;
                if (grid_points > 0) fo.grid_points = grid_points;
                out = isikit::filters_to_json(isikit::optimize_fom(cir, nu, sigma, fo));
            } else if (kind == isikit::ShortenerKind::Ubm) {
                isikit::UbmOptions uo;
                if (grid_points > 0) uo.grid_points = grid_points;
                const isikit::UbmFilters f = isikit::optimize_ubm(cir, nu, uo);
                std::cerr << "gm3 residual: mean(M(1+G)) = " << f.gm3_residual << "\n";
                out = isikit::filters_to_json(f);
            } else {
                out = isikit::filters_to_json(isikit::design_hom(cir, nu));
            }
            emit(out_path, out.dump(2) + "\n");
            return 0;
        }

        if (rates->parsed()) {
            isikit::json cfg = load_json(config_path);
            apply_overrides(cfg, overrides);
            auto [spec, n0_unused] = isikit::channel_spec_from_json(cfg);
            (void)n0_unused;
            std::ostringstream csv;
            csv << kCsvVersion << " rates\n" << isikit::RateReport::csv_header() << "\n";
            isikit::RateReportOptions opt;
            if (grid_points > 0) opt.grid_points = grid_points;
            bool violated = false;
            for (double snr : parse_list(snr_list)) {
                const isikit::Cir cir = spec.realize(isikit::n0_from_snr_db(snr));
                isikit::RateReport r = isikit::rate_report(cir, nu, opt);
                r.snr_db = snr;
                csv << r.csv_row() << "\n";
                const double slack = std::min({r.i_hom_u - r.i_hom_l, r.i_fom0 - r.i_hom, r.i_ubm - r.i_fom0,
                                               r.c - r.i_ubm, r.i_fom1 - r.i_hom_u});
                if (slack < -1e-9) violated = true;
            }
            emit(out_path, csv.str());
            if (violated) {
                std::cerr << "rate-inequality violation detected\n";
                return 1;
            }
            return 0;
        }

        if (simulate->parsed() || sweep_sigma->parsed() || sweep_delay->parsed()) {
            isikit::json cfg = load_json(config_path);
            apply_overrides(cfg, overrides);
            isikit::SimConfig sim = isikit::sim_config_from_json(cfg);
            if (seed_set) sim.seed = seed;
            std::ostringstream csv;
            if (simulate->parsed()) {
                csv << kCsvVersion << " simulate\n" << isikit::PointResult::csv_header() << "\n";
                for (double snr : sim.snr_db) csv << isikit::run_point(sim, snr).csv_row() << "\n";
            } else if (sweep_sigma->parsed()) {
                csv << kCsvVersion << " sweep-sigma\nsigma_in,sigma_out,ser,se_ser\n";
                for (const auto& p : isikit::sigma_experiment(sim, sweep_snr, parse_list(sigma_grid))) {
                    char buf[128];
                    std::snprintf(buf, sizeof(buf), "%.3g,%.8g,%.8g,%.4g", p.sigma_in, p.sigma_out, p.ser, p.se_ser);
                    csv << buf << "\n";
                }
            } else {
                std::vector<int> dv;
                for (double d : parse_list(d_list)) dv.push_back(static_cast<int>(d));
                csv << kCsvVersion << " sweep-delay\n" << isikit::PointResult::csv_header() << "\n";
                const auto sweeps = isikit::delay_sweep(sim, dv);
                for (const auto& sw : sweeps)
                    for (const auto& p : sw.points) csv << p.csv_row() << "\n";
                for (const auto& sw : sweeps) {
                    try {
                        std::cerr << "d=" << sw.d << ": SNR at normalized MI " << mi_target << " = "
                                  << isikit::snr_at_normalized_mi(sw.points, mi_target) << " dB\n";
                    } catch (const std::exception& e) {
                        std::cerr << "d=" << sw.d << ": " << e.what() << "\n";
                    }
                }
            }
            emit(out_path, csv.str());
            return 0;
        }

        if (verify->parsed()) {
            isikit::AcceptanceOptions opt;
            opt.quick = quick;
            opt.monte_carlo = !skip_mc;
            const auto results = isikit::run_acceptance(opt, &std::cout);
            bool all = true;
            for (const auto& r : results) all = all && r.pass;
            std::cout << (all ? "all criteria passed\n" : "criteria FAILED\n");
            return all ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
