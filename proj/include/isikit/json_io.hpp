#pragma once

// JSON bindings for the external interfaces: channel specifications in,
// designed filter sets out, simulation configs in.

#include <json.hpp>

#include <string>

#include "isikit/sim.hpp"

namespace isikit {

using json = nlohmann::json;

namespace detail {

inline TapVector taps_from_json(const json& j, const std::string& re_key, const std::string& im_key,
                                int origin = 0) {
    TapVector t;
    t.origin = origin;
    const auto& re = j.at(re_key);
    std::vector<double> im;
    if (j.contains(im_key)) im = j.at(im_key).get<std::vector<double>>();
    for (size_t i = 0; i < re.size(); ++i)
        t.taps.emplace_back(re[i].get<double>(), i < im.size() ? im[i] : 0.0);
    return t;
}

inline void taps_to_json(json& j, const std::string& prefix, const TapVector& t) {
    std::vector<double> re, im;
    re.reserve(t.taps.size());
    im.reserve(t.taps.size());
    for (const auto& c : t.taps) {
        re.push_back(c.real());
        im.push_back(c.imag());
    }
    j[prefix + "_re"] = re;
    j[prefix + "_im"] = im;
    j[prefix + "_origin"] = t.origin;
}

}  // namespace detail

// Accepts {"preset": "epr4"|"proakis_c", "snr_db": x} or
// {"name": "...", "taps_re": [...], "taps_im": [...], "n0": x} or
// {"random_length": n, "random_seed": s, "snr_db": x}.
inline std::pair<ChannelSpec, double> channel_spec_from_json(const json& j) {
    ChannelSpec spec;
    double n0 = 1.0;
    if (j.contains("preset")) {
        spec.kind = ChannelSpec::Kind::Preset;
        spec.preset = j.at("preset").get<std::string>();
        n0 = n0_from_snr_db(j.at("snr_db").get<double>());
    } else if (j.contains("taps_re")) {
        spec.kind = ChannelSpec::Kind::Taps;
        spec.taps = detail::taps_from_json(j, "taps_re", "taps_im");
        n0 = j.at("n0").get<double>();
    } else if (j.contains("random_length")) {
        spec.kind = ChannelSpec::Kind::Random;
        spec.random_length = j.at("random_length").get<int>();
        spec.random_seed = j.value("random_seed", 1ULL);
        n0 = n0_from_snr_db(j.at("snr_db").get<double>());
    } else {
        throw std::invalid_argument("channel spec: expected 'preset', 'taps_re' or 'random_length'");
    }
    return {spec, n0};
}

inline json filters_to_json(const FomFilters& f) {
    json j;
    j["kind"] = "fom";
    detail::taps_to_json(j, "w", f.w);
    detail::taps_to_json(j, "f", f.f);
    detail::taps_to_json(j, "b", f.b);
    j["sigma"] = f.sigma;
    j["milb_nats"] = f.milb;
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    j["milb_history"] = f.milb_history;
    return j;
}

inline json filters_to_json(const UbmFilters& f) {
    json j;
    j["kind"] = "ubm";
    detail::taps_to_json(j, "v", f.v);
    detail::taps_to_json(j, "g", f.g);
    j["milb_nats"] = f.milb;
    j["gm3_residual"] = f.gm3_residual;
    return j;
}

inline json filters_to_json(const HomFilters& f) {
    json j;
    j["kind"] = "hom";
    detail::taps_to_json(j, "w", f.w_hom);
    detail::taps_to_json(j, "h_f", f.h_f);
    detail::taps_to_json(j, "h_b", f.h_b);
    j["allpass_dev"] = f.allpass_dev;
    return j;
}

inline json filters_to_json(const ShortenerFilters& f) {
    return std::visit([](const auto& v) { return filters_to_json(v); }, f);
}

inline SimConfig sim_config_from_json(const json& j) {
    SimConfig cfg;
    double n0_ignored = 1.0;
    std::tie(cfg.channel, n0_ignored) = [&]() -> std::pair<ChannelSpec, double> {
        if (j.contains("channel")) return channel_spec_from_json(j.at("channel"));
        ChannelSpec s;
        return {s, 1.0};
    }();
    (void)n0_ignored;  // the harness re-derives N0 from each sweep SNR
    if (j.contains("shortener")) cfg.shortener = shortener_kind_from(j.at("shortener").get<std::string>());
    cfg.sigma = j.value("sigma", cfg.sigma);
    cfg.modulation = j.value("modulation", cfg.modulation);
    cfg.nu = j.value("nu", cfg.nu);
    cfg.d = j.value("d", cfg.d);
    cfg.block_len = j.value("block_len", cfg.block_len);
    cfg.n_blocks = j.value("n_blocks", cfg.n_blocks);
    if (j.contains("snr_db")) cfg.snr_db = j.at("snr_db").get<std::vector<double>>();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    return cfg;
}

}  // namespace isikit
