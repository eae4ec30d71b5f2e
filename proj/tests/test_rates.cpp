#include <catch2/catch_amalgamated.hpp>

#include "isikit/rates.hpp"

using namespace isikit;

TEST_CASE("capacity") {
    SECTION("flat channel at N0=1 is log 2") {
        const Cir cir(TapVector::real({1.0}), 1.0);
        REQUIRE(capacity(cir, FrequencyGrid::make(256)) == Catch::Approx(std::log(2.0)).epsilon(1e-13));
    }
    SECTION("vanishes as noise dominates") {
        const Cir cir = standard_channel(StdChannel::Epr4, 1e12);
        REQUIRE(capacity(cir, FrequencyGrid::make(256)) < 1e-11);
    }
    SECTION("stable under grid refinement") {
        const Cir cir = standard_channel(StdChannel::Epr4, 0.1);
        const double a = capacity(cir, FrequencyGrid::make(4096));
        const double b = capacity(cir, FrequencyGrid::make(40960));
        REQUIRE(std::abs(a - b) < 1e-8);
    }
}

TEST_CASE("delta_mse") {
    SECTION("flat channel at N0=1 is 1/2") {
        const Cir cir(TapVector::real({1.0}), 1.0);
        REQUIRE(delta_mse(cir, FrequencyGrid::make(256)) == Catch::Approx(0.5).epsilon(1e-13));
    }
    SECTION("vanishes at high SNR without spectral nulls") {
        const Cir cir(TapVector::real({1.0, 0.5}), 1e-8);
        REQUIRE(delta_mse(cir, FrequencyGrid::make(1024)) < 1e-7);
    }
    SECTION("sigma advisory bound arithmetics") {
        REQUIRE(select_sigma(0.9, 0.1).advisory_sigma_bound == Catch::Approx(0.95));
    }
}

TEST_CASE("hom_bounds") {
    const FrequencyGrid grid = FrequencyGrid::make(4096);
    SECTION("empty tail collapses the bounds") {
        const Cir cir = standard_channel(StdChannel::ProakisC, 0.5);
        MinPhaseOptions opt;
        opt.allpass_tol = 1e30;
        const HomFilters hom = design_hom(cir, cir.length() - 1, opt);
        const HomBounds b = hom_bounds(hom.h_f, hom.h_b, grid);
        REQUIRE(b.lower == Catch::Approx(b.upper).margin(1e-12));
    }
    SECTION("lower never exceeds upper") {
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            const Cir cir = random_iid_channel(5, seed, 0.2);
            MinPhaseOptions opt;
            opt.allpass_tol = 1e30;
            const HomFilters hom = design_hom(cir, 1, opt);
            const HomBounds b = hom_bounds(hom.h_f, hom.h_b, grid);
            REQUIRE(b.lower <= b.upper + 1e-12);
        }
    }
    SECTION("perfect-feedback bound can exceed capacity at high SNR") {
        const Cir cir = standard_channel(StdChannel::ProakisC, n0_from_snr_db(20.0));
        MinPhaseOptions opt;
        opt.allpass_tol = 1e30;
        const HomFilters hom = design_hom(cir, 1, opt);
        REQUIRE(hom_bounds(hom.h_f, hom.h_b, grid).upper > capacity(cir, grid));
    }
}

TEST_CASE("corollary_check stays below one") {
    const FrequencyGrid grid = FrequencyGrid::make(4096);
    for (double n0 : {0.1, 1.0}) REQUIRE(corollary_check(standard_channel(StdChannel::Epr4, n0), 1, grid) <= 1.0 + 1e-9);
    for (int nu : {1, 2}) REQUIRE(corollary_check(standard_channel(StdChannel::ProakisC, 0.2), nu, grid) <= 1.0 + 1e-9);
    for (uint64_t seed = 1; seed <= 20; ++seed)
        REQUIRE(corollary_check(random_iid_channel(5, seed, 0.1), 1, grid) <= 1.0 + 1e-9);
}

TEST_CASE("rate_report") {
    SECTION("flat single-tap channel needs no shortening") {
        const Cir cir(TapVector::real({1.0}), 0.5);
        const RateReport r = rate_report(cir, 0);
        REQUIRE(r.i_fom0 == Catch::Approx(r.c).margin(1e-6));
        REQUIRE(r.i_ubm == Catch::Approx(r.c).margin(1e-6));
    }
    SECTION("EPR-4 chain sanity at one SNR") {
        const Cir cir = standard_channel(StdChannel::Epr4, n0_from_snr_db(10.0));
        const RateReport r = rate_report(cir, 1);
        REQUIRE(r.i_hom_l <= r.i_hom_u + 1e-9);
        REQUIRE(r.i_hom <= r.i_fom0 + 1e-9);
        REQUIRE(r.i_fom0 <= r.i_ubm + 1e-9);
        REQUIRE(r.i_ubm <= r.c + 1e-9);
        REQUIRE(r.i_hom_u <= r.i_fom1 + 1e-9);
        REQUIRE(r.delta_mse > 0.0);
        REQUIRE(r.delta_mse <= 2.0);
    }
    SECTION("csv row shape") {
        const RateReport r;
        const std::string header = RateReport::csv_header();
        const std::string row = r.csv_row();
        REQUIRE(header.rfind("snr_db,", 0) == 0);
        REQUIRE(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
    }
}
