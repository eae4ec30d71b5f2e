#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "isikit/spectral.hpp"

using namespace isikit;

namespace {

TapVector random_taps(std::mt19937_64& rng, int len, int origin = 0) {
    std::normal_distribution<double> g(0.0, 1.0);
    TapVector t;
    t.origin = origin;
    t.taps.resize(static_cast<size_t>(len));
    for (auto& c : t.taps) c = cplx(g(rng), g(rng));
    return t;
}

int index_of_omega_zero(const FrequencyGrid& grid) { return grid.n_points / 2; }

}  // namespace

TEST_CASE("dtft basics") {
    const FrequencyGrid grid = FrequencyGrid::make(64);

    SECTION("single unit tap gives a constant spectrum") {
        const Spectrum s = dtft(TapVector::real({1.0}), grid);
        for (const auto& v : s.values) REQUIRE(std::abs(v - cplx{1.0, 0.0}) < 1e-14);
    }
    SECTION("EPR-4 has a spectral null at DC") {
        const Spectrum s = dtft(TapVector::real({0.5, 0.5, -0.5, -0.5}), grid);
        REQUIRE(std::abs(s.values[static_cast<size_t>(index_of_omega_zero(grid))]) < 1e-14);
    }
    SECTION("Proakis-C at omega=0 is the tap sum") {
        const Spectrum s = dtft(TapVector::real({0.227, 0.46, 0.688, 0.46, 0.227}), grid);
        REQUIRE(s.values[static_cast<size_t>(index_of_omega_zero(grid))].real() == Catch::Approx(2.062).epsilon(1e-12));
    }
    SECTION("fft path agrees with the direct sum") {
        std::mt19937_64 rng(1);
        for (int trial = 0; trial < 10; ++trial) {
            const TapVector t = random_taps(rng, 5 + trial, trial - 2);
            const Spectrum fast = dtft(t, grid);
            for (int k = 0; k < grid.n_points; ++k) {
                cplx acc{0.0, 0.0};
                for (int i = 0; i < t.size(); ++i) {
                    const double ph = grid.omegas[static_cast<size_t>(k)] * (i - t.origin);
                    acc += t.taps[static_cast<size_t>(i)] * cplx(std::cos(ph), std::sin(ph));
                }
                REQUIRE(std::abs(acc - fast.values[static_cast<size_t>(k)]) < 1e-12);
            }
        }
    }
}

TEST_CASE("idtft basics") {
    const FrequencyGrid grid = FrequencyGrid::make(32);

    SECTION("constant spectrum is a unit impulse") {
        Spectrum s;
        s.grid = grid;
        s.values.assign(32, cplx{1.0, 0.0});
        const TapVector t = idtft(s, -4, 4);
        for (int d = -4; d <= 4; ++d)
            REQUIRE(std::abs(t.at_delay(d) - (d == 0 ? cplx{1.0, 0.0} : cplx{0.0, 0.0})) < 1e-14);
    }
    SECTION("spectrum e^{jw} is a delay-one impulse") {
        Spectrum s;
        s.grid = grid;
        s.values.resize(32);
        for (int k = 0; k < 32; ++k) {
            const double w = grid.omegas[static_cast<size_t>(k)];
            s.values[static_cast<size_t>(k)] = cplx(std::cos(w), std::sin(w));
        }
        const TapVector t = idtft(s, 0, 3);
        REQUIRE(std::abs(t.at_delay(1) - cplx{1.0, 0.0}) < 1e-14);
        REQUIRE(std::abs(t.at_delay(0)) < 1e-14);
        REQUIRE(std::abs(t.at_delay(2)) < 1e-14);
    }
    SECTION("round trip recovers EPR-4 on a coarse grid") {
        const TapVector epr4 = TapVector::real({0.5, 0.5, -0.5, -0.5});
        const FrequencyGrid g8 = FrequencyGrid::make(8);
        const TapVector back = idtft(dtft(epr4, g8), 0, 3);
        for (int i = 0; i < 4; ++i)
            REQUIRE(std::abs(back.taps[static_cast<size_t>(i)] - epr4.taps[static_cast<size_t>(i)]) < 1e-12);
    }
}

TEST_CASE("mean_integral") {
    const FrequencyGrid grid = FrequencyGrid::make(128);

    SECTION("constant") {
        Spectrum s;
        s.grid = grid;
        s.values.assign(128, cplx{2.5, -1.0});
        REQUIRE(std::abs(mean_integral(s) - cplx{2.5, -1.0}) < 1e-14);
    }
    SECTION("pure tone integrates to zero") {
        Spectrum s;
        s.grid = grid;
        s.values.resize(128);
        for (int k = 0; k < 128; ++k) {
            const double w = grid.omegas[static_cast<size_t>(k)];
            s.values[static_cast<size_t>(k)] = cplx(std::cos(w), std::sin(w));
        }
        REQUIRE(std::abs(mean_integral(s)) < 1e-15);
    }
    SECTION("Parseval for EPR-4") {
        const Spectrum s = dtft(TapVector::real({0.5, 0.5, -0.5, -0.5}), grid);
        Spectrum mag;
        mag.grid = grid;
        mag.values.resize(s.values.size());
        for (size_t k = 0; k < s.values.size(); ++k) mag.values[k] = std::norm(s.values[k]);
        REQUIRE(mean_integral(mag).real() == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("convolution") {
    SECTION("identity") {
        std::mt19937_64 rng(2);
        const TapVector b = random_taps(rng, 6, 1);
        const TapVector c = convolve(TapVector::real({1.0}), b);
        REQUIRE(c.origin == b.origin);
        for (int i = 0; i < b.size(); ++i)
            REQUIRE(std::abs(c.taps[static_cast<size_t>(i)] - b.taps[static_cast<size_t>(i)]) < 1e-15);
    }
    SECTION("[1,1] * [1,-1] = [1,0,-1]") {
        const TapVector c = convolve(TapVector::real({1.0, 1.0}), TapVector::real({1.0, -1.0}));
        REQUIRE(c.size() == 3);
        REQUIRE(std::abs(c.taps[0] - cplx{1.0, 0.0}) < 1e-15);
        REQUIRE(std::abs(c.taps[1]) < 1e-15);
        REQUIRE(std::abs(c.taps[2] - cplx{-1.0, 0.0}) < 1e-15);
    }
    SECTION("convolution theorem on random taps") {
        std::mt19937_64 rng(3);
        const FrequencyGrid grid = FrequencyGrid::make(64);
        for (int trial = 0; trial < 20; ++trial) {
            const TapVector a = random_taps(rng, 4 + trial % 3, trial % 2);
            const TapVector b = random_taps(rng, 3 + trial % 4, -(trial % 3));
            const Spectrum lhs = dtft(convolve(a, b), grid);
            const Spectrum fa = dtft(a, grid);
            const Spectrum fb = dtft(b, grid);
            for (size_t k = 0; k < lhs.values.size(); ++k)
                REQUIRE(std::abs(lhs.values[k] - fa.values[k] * fb.values[k]) < 1e-12);
        }
    }
}

TEST_CASE("round-trip property for sequences shorter than N/2") {
    std::mt19937_64 rng(4);
    const FrequencyGrid grid = FrequencyGrid::make(64);
    for (int trial = 0; trial < 30; ++trial) {
        std::uniform_int_distribution<int> len_d(1, 31);
        const int len = len_d(rng);
        std::uniform_int_distribution<int> org_d(0, len - 1);
        const TapVector x = random_taps(rng, len, org_d(rng));
        const TapVector back = idtft(dtft(x, grid), x.min_delay(), x.max_delay());
        REQUIRE(back.origin == x.origin);
        for (int i = 0; i < x.size(); ++i)
            REQUIRE(std::abs(back.taps[static_cast<size_t>(i)] - x.taps[static_cast<size_t>(i)]) < 1e-12);
    }
}

TEST_CASE("add_aligned") {
    const TapVector a = TapVector::real({1.0, 2.0});              // delays 0,1
    TapVector b = TapVector::real({3.0, 4.0});
    b.origin = -2;                                                // delays 2,3
    const TapVector s = add_aligned(a, b);
    REQUIRE(s.min_delay() == 0);
    REQUIRE(s.max_delay() == 3);
    REQUIRE(s.at_delay(0).real() == 1.0);
    REQUIRE(s.at_delay(1).real() == 2.0);
    REQUIRE(s.at_delay(2).real() == 3.0);
    REQUIRE(s.at_delay(3).real() == 4.0);
}
