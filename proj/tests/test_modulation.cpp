#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "isikit/modulation.hpp"

using namespace isikit;

namespace {

int popcount(uint32_t v) { return __builtin_popcount(v); }

}  // namespace

TEST_CASE("constellations have unit average energy") {
    for (ModScheme s : {ModScheme::Bpsk, ModScheme::Qpsk, ModScheme::Psk8, ModScheme::Qam16}) {
        const Modulation m = make_modulation(s);
        REQUIRE(m.cardinality() == (1 << m.bits_per_symbol));
        double e = 0.0;
        for (const auto& p : m.points) e += std::norm(p);
        REQUIRE(e / m.cardinality() == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("labels are a bijection") {
    for (ModScheme s : {ModScheme::Bpsk, ModScheme::Qpsk, ModScheme::Psk8, ModScheme::Qam16}) {
        const Modulation m = make_modulation(s);
        std::set<std::pair<double, double>> seen;
        for (const auto& p : m.points) seen.insert({p.real(), p.imag()});
        REQUIRE(static_cast<int>(seen.size()) == m.cardinality());
    }
}

TEST_CASE("Gray adjacency") {
    SECTION("8PSK ring neighbors differ in one bit") {
        const Modulation m = make_modulation(ModScheme::Psk8);
        // Recover the position of each label on the ring by angle.
        std::vector<uint32_t> label_at(8);
        for (uint32_t label = 0; label < 8; ++label) {
            const double ang = std::arg(m.points[label]);
            int pos = static_cast<int>(std::lround(ang / (2.0 * kPi / 8)));
            pos = (pos % 8 + 8) % 8;
            label_at[static_cast<size_t>(pos)] = label;
        }
        for (int p = 0; p < 8; ++p)
            REQUIRE(popcount(label_at[static_cast<size_t>(p)] ^ label_at[static_cast<size_t>((p + 1) % 8)]) == 1);
    }
    SECTION("16QAM lattice neighbors differ in one bit") {
        const Modulation m = make_modulation(ModScheme::Qam16);
        const double step = 2.0 / std::sqrt(10.0);
        for (uint32_t a = 0; a < 16; ++a)
            for (uint32_t b = 0; b < 16; ++b) {
                const cplx d = m.points[a] - m.points[b];
                const bool neighbor = std::abs(std::abs(d) - step) < 1e-9 &&
                                      (std::abs(d.real()) < 1e-9 || std::abs(d.imag()) < 1e-9);
                if (neighbor) REQUIRE(popcount(a ^ b) == 1);
            }
    }
    SECTION("QPSK quadrant bits") {
        const Modulation m = make_modulation(ModScheme::Qpsk);
        for (uint32_t label = 0; label < 4; ++label) {
            REQUIRE(((label & 1) == 1) == (m.points[label].real() > 0));
            REQUIRE(((label & 2) == 2) == (m.points[label].imag() > 0));
        }
    }
}

TEST_CASE("map_bits uses LSB-first labels") {
    const Modulation m = make_modulation(ModScheme::Qam16);
    const uint8_t bits[4] = {1, 0, 1, 1};  // label 0b1101 = 13
    REQUIRE(m.map_bits(bits) == m.points[13]);
}
