#pragma once

// Monte Carlo measurement harness: transmit/receive simulation, SER/BER and
// measured-MI estimation, the sigma_in -> sigma_out experiment, and the
// decision-delay sweep. Blocks are embarrassingly parallel; each block owns
// an RNG stream derived from (seed, block index) so results are independent
// of the thread count.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "isikit/channel.hpp"
#include "isikit/equalizer.hpp"
#include "isikit/modulation.hpp"
#include "isikit/rates.hpp"
#include "isikit/shortener.hpp"

namespace isikit {

enum class ShortenerKind { Fom, Ubm, Hom };

inline ShortenerKind shortener_kind_from(const std::string& s) {
    if (s == "fom") return ShortenerKind::Fom;
    if (s == "ubm") return ShortenerKind::Ubm;
    if (s == "hom") return ShortenerKind::Hom;
    throw std::invalid_argument("unknown shortener kind '" + s + "'");
}

inline const char* to_string(ShortenerKind k) {
    switch (k) {
        case ShortenerKind::Fom: return "fom";
        case ShortenerKind::Ubm: return "ubm";
        default: return "hom";
    }
}

struct ChannelSpec {
    enum class Kind { Preset, Taps, Random } kind = Kind::Preset;
    std::string preset = "epr4";
    TapVector taps;          // explicit taps (Kind::Taps)
    int random_length = 5;   // Kind::Random
    uint64_t random_seed = 1;

    Cir realize(double n0) const {
        switch (kind) {
            case Kind::Preset: return standard_channel(preset, n0);
            case Kind::Taps: return Cir(taps, n0);
            case Kind::Random: return random_iid_channel(random_length, random_seed, n0);
        }
        throw std::logic_error("ChannelSpec: bad kind");
    }
};

struct SimConfig {
    ChannelSpec channel;
    ShortenerKind shortener = ShortenerKind::Fom;
    double sigma = 1.0;  // FOM design sigma
    std::string modulation = "qpsk";
    int nu = 1;
    int d = -1;  // < 0 selects the default D = L + 2
    int block_len = 1064;
    int n_blocks = 100;
    std::vector<double> snr_db;
    uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const {
        if (block_len < 64) throw std::invalid_argument("SimConfig: block_len must be >= 64");
        if (n_blocks < 1) throw std::invalid_argument("SimConfig: n_blocks must be >= 1");
    }
};

struct PointResult {
    std::string shortener;
    double sigma_in = 0.0;
    std::string modulation;
    double snr_db = 0.0;
    int d = 0;
    double ser = 0.0;
    double ber = 0.0;
    double mi_bits = 0.0;
    double mi_norm = 0.0;
    double sigma_out = 0.0;  // 1 - SER
    double se_mi = 0.0;      // standard error of mi_bits from per-block batching
    double se_ser = 0.0;
    int n_blocks = 0;

    static std::string csv_header() {
        return "shortener,sigma_in,modulation,snr_db,d,ser,ber,mi_bits,mi_norm,sigma_out,se_mi,n_blocks";
    }
    std::string csv_row() const {
        char buf[320];
        std::snprintf(buf, sizeof(buf), "%s,%.4g,%s,%.6g,%d,%.8g,%.8g,%.8g,%.8g,%.8g,%.4g,%d",
                      shortener.c_str(), sigma_in, modulation.c_str(), snr_db, d, ser, ber, mi_bits, mi_norm,
                      sigma_out, se_mi, n_blocks);
        return buf;
    }
};

// ---------------------------------------------------------------------------

// Gray-maps bits, convolves with the channel, and adds complex Gaussian noise
// of variance N0 per sample. The output spans the K + L - 1 samples of the
// block including the decaying guard tail.
inline std::pair<std::vector<cplx>, std::vector<cplx>> transmit(const std::vector<uint8_t>& bits,
                                                                const Modulation& mod, const Cir& cir,
                                                                std::mt19937_64& rng) {
    const int nbits = mod.bits_per_symbol;
    if (bits.size() % static_cast<size_t>(nbits) != 0)
        throw std::invalid_argument("transmit: bit count must be divisible by log2|X|");
    const int num_k = static_cast<int>(bits.size()) / nbits;
    std::vector<cplx> x(static_cast<size_t>(num_k));
    for (int k = 0; k < num_k; ++k) x[static_cast<size_t>(k)] = mod.map_bits(&bits[static_cast<size_t>(k) * nbits]);

    const int len = cir.length();
    std::vector<cplx> y(static_cast<size_t>(num_k + len - 1), cplx{0.0, 0.0});
    for (int k = 0; k < num_k; ++k)
        for (int l = 0; l < len; ++l) y[static_cast<size_t>(k + l)] += cir.h.taps[static_cast<size_t>(l)] * x[static_cast<size_t>(k)];
    std::normal_distribution<double> gauss(0.0, std::sqrt(cir.n0 / 2.0));
    for (auto& v : y) v += cplx(gauss(rng), gauss(rng));
    return {std::move(x), std::move(y)};
}

// Measured mutual information in bits/symbol from per-bit LLRs and the true
// bits: log2|X| + mean_k log2 p(x'_k | x_k), with the per-bit log-probability
// (1+x')L/2 - log(1+exp(L)) evaluated in a numerically stable form.
inline double measured_mi(const std::vector<double>& llrs, const std::vector<uint8_t>& true_bits,
                          int bits_per_symbol) {
    if (llrs.size() != true_bits.size()) throw std::invalid_argument("measured_mi: length mismatch");
    if (llrs.empty()) return 0.0;
    double acc = 0.0;  // sum of natural-log p over bits
    for (size_t i = 0; i < llrs.size(); ++i) {
        const double l = llrs[i];
        const double log1pexp = std::max(l, 0.0) + std::log1p(std::exp(-std::abs(l)));
        acc += (true_bits[i] ? l : 0.0) - log1pexp;
    }
    const double symbols = static_cast<double>(llrs.size()) / bits_per_symbol;
    return bits_per_symbol + (acc / std::log(2.0)) / symbols;
}

inline double measured_mi(const LlrFrame& frame, const std::vector<uint8_t>& true_bits) {
    return measured_mi(frame.llrs, true_bits, frame.bits_per_symbol);
}

namespace detail {

inline uint64_t block_stream(uint64_t seed, double snr_db, uint64_t block) {
    uint64_t s = mix64(seed);
    uint64_t snr_bits;
    static_assert(sizeof(snr_bits) == sizeof(snr_db));
    std::memcpy(&snr_bits, &snr_db, sizeof(snr_bits));
    s ^= mix64(snr_bits);
    s ^= mix64(0x51ed2701u + block);
    return mix64(s);
}

struct BlockStats {
    double mi = 0.0;
    int sym_errors = 0;
    int bit_errors = 0;
};

inline void parallel_blocks(int n_blocks, int threads, const std::function<BlockStats(int)>& work,
                            std::vector<BlockStats>& out) {
    out.assign(static_cast<size_t>(n_blocks), BlockStats{});
    int nt = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    nt = std::max(1, std::min(nt, n_blocks));
    std::atomic<int> next{0};
    auto runner = [&]() {
        for (;;) {
            const int b = next.fetch_add(1);
            if (b >= n_blocks) return;
            out[static_cast<size_t>(b)] = work(b);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < nt; ++i) pool.emplace_back(runner);
    runner();
    for (auto& th : pool) th.join();
}

}  // namespace detail

// Designs the shortener once for (channel, SNR), then measures SER/BER/MI and
// sigma_out over independent blocks.
inline PointResult run_point(const SimConfig& cfg, double snr_db) {
    cfg.validate();
    const Cir cir = cfg.channel.realize(n0_from_snr_db(snr_db));
    const Modulation mod = make_modulation(cfg.modulation);
    const int len = cir.length();
    const int d = cfg.d >= 0 ? cfg.d : len + 2;

    ShortenerFilters filters;
    TrellisConfig tc;
    tc.nu = cfg.nu;
    tc.d = d;
    tc.modulation = mod;
    switch (cfg.shortener) {
        case ShortenerKind::Fom:
            filters = optimize_fom(cir, cfg.nu, cfg.sigma);
            tc.metric = MetricKind::ForneyFeedback;
            break;
        case ShortenerKind::Ubm:
            filters = optimize_ubm(cir, cfg.nu);
            tc.metric = MetricKind::Ungerboeck;
            break;
        case ShortenerKind::Hom:
            filters = design_hom(cir, cfg.nu);
            tc.metric = MetricKind::HomFeedback;
            break;
    }

    const int nbits = mod.bits_per_symbol;
    const int num_k = cfg.block_len;
    auto work = [&](int block) {
        std::mt19937_64 rng(detail::block_stream(cfg.seed, snr_db, static_cast<uint64_t>(block)));
        std::vector<uint8_t> bits(static_cast<size_t>(num_k) * nbits);
        std::bernoulli_distribution coin(0.5);
        for (auto& b : bits) b = coin(rng) ? 1 : 0;
        auto [x, y] = transmit(bits, mod, cir, rng);
        const LlrFrame frame = equalize(y, filters, tc, num_k);
        detail::BlockStats st;
        st.mi = measured_mi(frame, bits);
        const std::vector<uint32_t> labels = hard_labels(frame);
        for (int k = 0; k < num_k; ++k) {
            uint32_t truth = 0;
            for (int n = 0; n < nbits; ++n) truth |= static_cast<uint32_t>(bits[static_cast<size_t>(k) * nbits + n]) << n;
            if (labels[static_cast<size_t>(k)] != truth) ++st.sym_errors;
            st.bit_errors += __builtin_popcount(labels[static_cast<size_t>(k)] ^ truth);
        }
        return st;
    };
    std::vector<detail::BlockStats> stats;
    detail::parallel_blocks(cfg.n_blocks, cfg.threads, work, stats);

    PointResult r;
    r.shortener = to_string(cfg.shortener);
    r.sigma_in = cfg.shortener == ShortenerKind::Fom ? cfg.sigma : 0.0;
    r.modulation = cfg.modulation;
    r.snr_db = snr_db;
    r.d = d;
    r.n_blocks = cfg.n_blocks;
    double mi_sum = 0.0, mi_sq = 0.0, ser_sum = 0.0, ser_sq = 0.0;
    long bit_err = 0;
    for (const auto& st : stats) {
        mi_sum += st.mi;
        mi_sq += st.mi * st.mi;
        const double bser = static_cast<double>(st.sym_errors) / num_k;
        ser_sum += bser;
        ser_sq += bser * bser;
        bit_err += st.bit_errors;
    }
    const double nb = static_cast<double>(cfg.n_blocks);
    r.mi_bits = mi_sum / nb;
    r.mi_norm = r.mi_bits / nbits;
    r.ser = ser_sum / nb;
    r.ber = static_cast<double>(bit_err) / (nb * num_k * nbits);
    r.sigma_out = 1.0 - r.ser;
    if (cfg.n_blocks > 1) {
        r.se_mi = std::sqrt(std::max(0.0, mi_sq / nb - r.mi_bits * r.mi_bits) / (nb - 1));
        r.se_ser = std::sqrt(std::max(0.0, ser_sq / nb - r.ser * r.ser) / (nb - 1));
    }
    return r;
}

// Fig.4-style experiment: for each design-stage sigma_in, design the FOM
// filters, equalize, and measure sigma_out = 1 - SER.
struct SigmaPoint {
    double sigma_in = 0.0;
    double sigma_out = 0.0;
    double ser = 0.0;
    double se_ser = 0.0;
};

inline std::vector<SigmaPoint> sigma_experiment(const SimConfig& cfg, double snr_db,
                                                const std::vector<double>& sigma_grid) {
    std::vector<SigmaPoint> out;
    out.reserve(sigma_grid.size());
    for (double s : sigma_grid) {
        if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("sigma_experiment: sigma_in in [0,1]");
        SimConfig c = cfg;
        c.shortener = ShortenerKind::Fom;
        c.sigma = s;
        const PointResult p = run_point(c, snr_db);
        out.push_back({s, p.sigma_out, p.ser, p.se_ser});
    }
    return out;
}

// MI-vs-SNR tables per decision delay.
struct DelaySweepResult {
    int d = 0;
    std::vector<PointResult> points;
};

inline std::vector<DelaySweepResult> delay_sweep(const SimConfig& cfg, const std::vector<int>& d_values) {
    std::vector<DelaySweepResult> out;
    for (int d : d_values) {
        if (d < cfg.nu) throw std::invalid_argument("delay_sweep: d must be >= nu");
        DelaySweepResult row;
        row.d = d;
        SimConfig c = cfg;
        c.d = d;
        for (double snr : cfg.snr_db) row.points.push_back(run_point(c, snr));
        out.push_back(std::move(row));
    }
    return out;
}

// SNR needed to reach a target normalized MI, by linear interpolation over
// the sweep grid. Requires the target to be bracketed.
inline double snr_at_normalized_mi(const std::vector<PointResult>& points, double target) {
    for (size_t i = 1; i < points.size(); ++i) {
        const double a = points[i - 1].mi_norm, b = points[i].mi_norm;
        if ((a <= target && target <= b) || (b <= target && target <= a)) {
            if (a == b) return points[i - 1].snr_db;
            const double t = (target - a) / (b - a);
            return points[i - 1].snr_db + t * (points[i].snr_db - points[i - 1].snr_db);
        }
    }
    throw std::runtime_error("snr_at_normalized_mi: target MI not bracketed by the sweep");
}

}  // namespace isikit
