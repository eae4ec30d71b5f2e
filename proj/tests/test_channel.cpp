#include <catch2/catch_amalgamated.hpp>

#include "isikit/channel.hpp"
#include "isikit/minphase.hpp"

using namespace isikit;

TEST_CASE("standard channels") {
    const Cir epr4 = standard_channel(StdChannel::Epr4, 1.0);
    const double epr4_taps[] = {0.5, 0.5, -0.5, -0.5};
    for (int i = 0; i < 4; ++i) REQUIRE(epr4.h.taps[static_cast<size_t>(i)].real() == epr4_taps[i]);
    REQUIRE(epr4.h.energy() == Catch::Approx(1.0).epsilon(1e-14));

    const Cir prkc = standard_channel("proakis_c", 0.5);
    const double prkc_taps[] = {0.227, 0.46, 0.688, 0.46, 0.227};
    for (int i = 0; i < 5; ++i) REQUIRE(prkc.h.taps[static_cast<size_t>(i)].real() == prkc_taps[i]);

    REQUIRE_THROWS_AS(standard_channel("epr5", 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(standard_channel(StdChannel::Epr4, 0.0), std::invalid_argument);
}

TEST_CASE("random IID channels") {
    const Cir a = random_iid_channel(5, 42);
    REQUIRE(a.h.energy() == Catch::Approx(1.0).epsilon(1e-12));
    const Cir b = random_iid_channel(5, 42);
    for (int i = 0; i < 5; ++i) REQUIRE(a.h.taps[static_cast<size_t>(i)] == b.h.taps[static_cast<size_t>(i)]);
    const Cir c = random_iid_channel(5, 43);
    bool same = true;
    for (int i = 0; i < 5; ++i) same = same && a.h.taps[static_cast<size_t>(i)] == c.h.taps[static_cast<size_t>(i)];
    REQUIRE_FALSE(same);
    const Cir one = random_iid_channel(1, 7);
    REQUIRE(std::abs(one.h.taps[0]) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("min_phase on a channel that is already minimum-phase") {
    const Cir cir(TapVector::real({1.0, 0.5}), 1.0);
    const MinPhaseResult mp = min_phase(cir);
    REQUIRE(mp.h_tilde.size() == 2);
    REQUIRE(std::abs(mp.h_tilde.taps[0] - cplx{1.0, 0.0}) < 1e-6);
    REQUIRE(std::abs(mp.h_tilde.taps[1] - cplx{0.5, 0.0}) < 1e-6);
    // w_hom is then (close to) a unit impulse.
    REQUIRE(std::abs(mp.w_hom.at_delay(0) - cplx{1.0, 0.0}) < 1e-4);
    double off = 0.0;
    for (int d = mp.w_hom.min_delay(); d <= mp.w_hom.max_delay(); ++d)
        if (d != 0) off = std::max(off, std::abs(mp.w_hom.at_delay(d)));
    REQUIRE(off < 1e-4);
}

TEST_CASE("min_phase flips a two-tap maximum-phase channel") {
    const Cir cir(TapVector::real({0.5, 1.0}), 1.0);
    const MinPhaseResult mp = min_phase(cir);
    REQUIRE(std::abs(mp.h_tilde.taps[0] - cplx{1.0, 0.0}) < 1e-4);
    REQUIRE(std::abs(mp.h_tilde.taps[1] - cplx{0.5, 0.0}) < 1e-4);
}

TEST_CASE("min_phase magnitude preservation and all-pass scaling") {
    const FrequencyGrid grid = FrequencyGrid::make(4096);
    for (double n0 : {1.0, 0.1}) {
        for (const Cir& cir : {standard_channel(StdChannel::Epr4, n0), standard_channel(StdChannel::ProakisC, n0),
                               random_iid_channel(5, 3, n0)}) {
            MinPhaseOptions opt;
            opt.allpass_tol = 1e30;
            const MinPhaseResult mp = min_phase(cir, opt);
            const Spectrum ht = dtft(mp.h_tilde, grid);
            const Spectrum h = dtft(cir.h, grid);
            double l1 = 0.0, max_away = 0.0;
            for (int k = 0; k < grid.n_points; ++k) {
                const double a = std::norm(ht.values[static_cast<size_t>(k)]);
                const double b = std::norm(h.values[static_cast<size_t>(k)]) / n0;
                l1 += std::abs(a - b);
                if (std::abs(h.values[static_cast<size_t>(k)]) > 0.3)  // away from spectral nulls
                    max_away = std::max(max_away, std::abs(a - b));
            }
            l1 /= grid.n_points;
            REQUIRE(l1 < 1e-4);
            REQUIRE(max_away < 1e-4);
        }
    }
}

TEST_CASE("min_phase front-loads energy") {
    for (const Cir& cir : {standard_channel(StdChannel::Epr4, 1.0), standard_channel(StdChannel::ProakisC, 1.0),
                           random_iid_channel(5, 11, 1.0), random_iid_channel(6, 12, 1.0)}) {
        MinPhaseOptions opt;
        opt.allpass_tol = 1e30;
        const MinPhaseResult mp = min_phase(cir, opt);
        double part_min = 0.0, part_orig = 0.0;
        for (int k = 0; k < cir.length(); ++k) {
            part_min += std::norm(mp.h_tilde.taps[static_cast<size_t>(k)]);
            part_orig += std::norm(cir.h.taps[static_cast<size_t>(k)]) / cir.n0;
            REQUIRE(part_min >= part_orig - 1e-6);
        }
    }
}

TEST_CASE("min_phase reports excessive all-pass truncation error") {
    MinPhaseOptions opt;
    opt.allpass_tol = 1e-9;  // unreachable after 129-tap truncation
    REQUIRE_THROWS_AS(min_phase(standard_channel(StdChannel::ProakisC, 1.0), opt), std::runtime_error);
}

TEST_CASE("split_target") {
    TapVector h = TapVector::real({1.0, 2.0, 3.0, 4.0});

    SECTION("nu=1 keeps two taps in front and two in the tail") {
        auto [f, b] = split_target(h, 1);
        REQUIRE(f.size() == 2);
        REQUIRE(f.at_delay(0).real() == 1.0);
        REQUIRE(f.at_delay(1).real() == 2.0);
        REQUIRE(b.size() == 2);
        REQUIRE(b.min_delay() == 2);
        REQUIRE(b.at_delay(2).real() == 3.0);
        REQUIRE(b.at_delay(3).real() == 4.0);
    }
    SECTION("nu=L-1 leaves an empty tail") {
        auto [f, b] = split_target(h, 3);
        REQUIRE(f.size() == 4);
        REQUIRE(b.empty());
    }
    SECTION("nu=0 is the decision-feedback split") {
        auto [f, b] = split_target(h, 0);
        REQUIRE(f.size() == 1);
        REQUIRE(b.size() == 3);
        REQUIRE(b.min_delay() == 1);
    }
    SECTION("front and tail reassemble the target") {
        auto [f, b] = split_target(h, 2);
        const TapVector sum = add_aligned(f, b);
        for (int d = 0; d < 4; ++d) REQUIRE(std::abs(sum.at_delay(d) - h.at_delay(d)) == 0.0);
    }
}
