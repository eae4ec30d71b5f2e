#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "isikit/sim.hpp"

using namespace isikit;

TEST_CASE("transmit") {
    const Modulation mod = make_modulation(ModScheme::Qpsk);

    SECTION("flat channel with vanishing noise returns the symbols") {
        Cir cir(TapVector::real({1.0}), 1e-20);
        std::mt19937_64 rng(1);
        std::vector<uint8_t> bits = {0, 1, 1, 0, 1, 1, 0, 0};
        auto [x, y] = transmit(bits, mod, cir, rng);
        REQUIRE(x.size() == 4);
        REQUIRE(y.size() == 4);
        for (size_t i = 0; i < x.size(); ++i) REQUIRE(std::abs(x[i] - y[i]) < 1e-9);
    }
    SECTION("output spans K + L - 1 samples") {
        Cir cir = standard_channel(StdChannel::ProakisC, 0.1);
        std::mt19937_64 rng(2);
        std::vector<uint8_t> bits(2 * 100, 1);
        auto [x, y] = transmit(bits, mod, cir, rng);
        REQUIRE(x.size() == 100);
        REQUIRE(y.size() == 100 + 4);
    }
    SECTION("empirical noise variance matches N0") {
        Cir cir(TapVector::real({1.0}), 0.37);
        std::mt19937_64 rng(3);
        const int num_k = 500000;
        std::vector<uint8_t> bits(static_cast<size_t>(2 * num_k), 0);
        auto [x, y] = transmit(bits, mod, cir, rng);
        double acc = 0.0;
        for (int k = 0; k < num_k; ++k) acc += std::norm(y[static_cast<size_t>(k)] - x[static_cast<size_t>(k)]);
        REQUIRE(acc / num_k == Catch::Approx(0.37).epsilon(0.01));
    }
    SECTION("bit count must divide") {
        Cir cir(TapVector::real({1.0}), 1.0);
        std::mt19937_64 rng(4);
        std::vector<uint8_t> bits(7, 0);
        REQUIRE_THROWS_AS(transmit(bits, mod, cir, rng), std::invalid_argument);
    }
}

TEST_CASE("measured_mi") {
    SECTION("all-zero LLRs carry no information") {
        std::vector<double> llrs(4000, 0.0);
        std::vector<uint8_t> bits(4000, 1);
        REQUIRE(measured_mi(llrs, bits, 2) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("saturated correct LLRs reach log2|X|") {
        std::vector<double> llrs(4000, 50.0);
        std::vector<uint8_t> bits(4000, 1);
        REQUIRE(measured_mi(llrs, bits, 4) == Catch::Approx(4.0).margin(1e-9));
    }
    SECTION("synthetic BPSK-AWGN LLRs match the quadrature value") {
        // Consistent BPSK LLRs: L | bit is N(+/-mu, 2 mu). The reference MI is
        // 1 - E[log2(1+e^{-L})] under L ~ N(mu, 2 mu), by Gauss-Hermite.
        for (double mu : {0.5, 2.0, 8.0}) {
            std::mt19937_64 rng(17);
            std::normal_distribution<double> g(0.0, 1.0);
            const int n = 400000;
            std::vector<double> llrs(static_cast<size_t>(n));
            std::vector<uint8_t> bits(static_cast<size_t>(n));
            std::bernoulli_distribution coin(0.5);
            for (int i = 0; i < n; ++i) {
                const bool b = coin(rng);
                const double l = mu + std::sqrt(2.0 * mu) * g(rng);
                bits[static_cast<size_t>(i)] = b ? 1 : 0;
                llrs[static_cast<size_t>(i)] = b ? l : -l;
            }
            const double mi = measured_mi(llrs, bits, 1);

            // 16-node Gauss-Hermite: E[f(Z)] = (1/sqrt(pi)) sum w_i f(sqrt(2) x_i), Z ~ N(0,1).
            static const double xs[8] = {0.27348104613815, 0.82295144914466, 1.38025853919888,
                                         1.95178799091625, 2.54620215784748, 3.17699916197996,
                                         3.86944790486012, 4.68873893930582};
            static const double ws[8] = {5.079294790166137e-01, 2.806474585285337e-01,
                                         8.381004139898583e-02, 1.288031153550997e-02,
                                         9.322840086241805e-04, 2.711860092537881e-05,
                                         2.320980844865211e-07, 2.654807474011182e-10};
            double acc = 0.0;
            for (int i = 0; i < 8; ++i)
                for (double sgn : {-1.0, 1.0})
                    acc += ws[i] * std::log2(1.0 + std::exp(-(mu + std::sqrt(2.0 * mu) * std::sqrt(2.0) * sgn * xs[i])));
            const double ref = 1.0 - acc / std::sqrt(kPi);
            REQUIRE(mi == Catch::Approx(ref).margin(0.004));
        }
    }
}

TEST_CASE("run_point") {
    SimConfig cfg;
    cfg.channel.kind = ChannelSpec::Kind::Preset;
    cfg.channel.preset = "epr4";
    cfg.shortener = ShortenerKind::Fom;
    cfg.sigma = 1.0;
    cfg.modulation = "qpsk";
    cfg.nu = 1;
    cfg.block_len = 128;
    cfg.n_blocks = 6;
    cfg.seed = 5;

    SECTION("seeded determinism, independent of thread count") {
        SimConfig c1 = cfg;
        c1.threads = 1;
        SimConfig c2 = cfg;
        c2.threads = 2;
        const PointResult a = run_point(c1, 8.0);
        const PointResult b = run_point(c2, 8.0);
        REQUIRE(a.mi_bits == b.mi_bits);
        REQUIRE(a.ser == b.ser);
        REQUIRE(a.ber == b.ber);
        const PointResult c = run_point(c1, 8.0);
        REQUIRE(a.mi_bits == c.mi_bits);
    }
    SECTION("sigma_out is 1 - SER and MI is bounded") {
        const PointResult p = run_point(cfg, 10.0);
        REQUIRE(p.sigma_out == Catch::Approx(1.0 - p.ser).margin(1e-15));
        REQUIRE(p.mi_bits <= 2.0 + 1e-12);
        REQUIRE(p.mi_norm == Catch::Approx(p.mi_bits / 2.0));
    }
    SECTION("essentially noiseless operation is error-free") {
        SimConfig c = cfg;
        c.n_blocks = 4;
        const PointResult p = run_point(c, 30.0);
        REQUIRE(p.ser == 0.0);
    }
    SECTION("doubling the block count stays within 3 standard errors") {
        SimConfig c1 = cfg;
        c1.n_blocks = 24;
        c1.block_len = 256;
        SimConfig c2 = c1;
        c2.n_blocks = 48;
        const PointResult a = run_point(c1, 7.0);
        const PointResult b = run_point(c2, 7.0);
        const double se = std::sqrt(a.se_mi * a.se_mi + b.se_mi * b.se_mi);
        REQUIRE(std::abs(a.mi_bits - b.mi_bits) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("sigma_experiment produces one row per design sigma") {
    SimConfig cfg;
    cfg.channel.kind = ChannelSpec::Kind::Preset;
    cfg.channel.preset = "epr4";
    cfg.modulation = "bpsk";
    cfg.nu = 1;
    cfg.block_len = 128;
    cfg.n_blocks = 3;
    cfg.seed = 6;
    const auto rows = sigma_experiment(cfg, 8.0, {0.0, 0.5, 1.0});
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) REQUIRE(r.sigma_out == Catch::Approx(1.0 - r.ser).margin(1e-15));
    REQUIRE_THROWS_AS(sigma_experiment(cfg, 8.0, {1.5}), std::invalid_argument);
}

TEST_CASE("snr_at_normalized_mi interpolates linearly") {
    std::vector<PointResult> pts(3);
    pts[0].snr_db = 0.0;
    pts[0].mi_norm = 0.2;
    pts[1].snr_db = 2.0;
    pts[1].mi_norm = 0.4;
    pts[2].snr_db = 4.0;
    pts[2].mi_norm = 0.8;
    REQUIRE(snr_at_normalized_mi(pts, 0.5) == Catch::Approx(2.5));
    REQUIRE(snr_at_normalized_mi(pts, 0.4) == Catch::Approx(2.0));
    REQUIRE_THROWS_AS(snr_at_normalized_mi(pts, 0.95), std::runtime_error);
}

TEST_CASE("delay sweep runs per-D sweeps") {
    SimConfig cfg;
    cfg.channel.kind = ChannelSpec::Kind::Preset;
    cfg.channel.preset = "epr4";
    cfg.shortener = ShortenerKind::Hom;
    cfg.modulation = "bpsk";
    cfg.nu = 1;
    cfg.block_len = 128;
    cfg.n_blocks = 2;
    cfg.seed = 9;
    cfg.snr_db = {4.0, 8.0};
    const auto sweeps = delay_sweep(cfg, {3, 6});
    REQUIRE(sweeps.size() == 2);
    REQUIRE(sweeps[0].points.size() == 2);
    REQUIRE(sweeps[0].points[0].d == 3);
    REQUIRE(sweeps[1].points[0].d == 6);
    REQUIRE_THROWS_AS(delay_sweep(cfg, {0}), std::invalid_argument);
}
