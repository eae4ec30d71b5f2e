#pragma once

// Unit-energy constellations with Gray bit labelings.
//
// Bit conventions used throughout: a logical bit b in {0,1} has the antipodal
// value 2b-1; LLRs are positive when the +1 value (logical 1) is more likely.
// points[] is indexed directly by the bit label (LSB = bit 0), so mapping and
// demapping are table lookups.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "isikit/spectral.hpp"

namespace isikit {

enum class ModScheme { Bpsk, Qpsk, Psk8, Qam16 };

struct Modulation {
    std::string name;
    int bits_per_symbol = 1;
    std::vector<cplx> points;  // points[label], unit average energy

    int cardinality() const { return static_cast<int>(points.size()); }

    cplx map_bits(const uint8_t* bits) const {
        uint32_t label = 0;
        for (int n = 0; n < bits_per_symbol; ++n) label |= static_cast<uint32_t>(bits[n] & 1) << n;
        return points[label];
    }
};

inline Modulation make_modulation(ModScheme scheme) {
    Modulation m;
    switch (scheme) {
        case ModScheme::Bpsk: {
            m.name = "bpsk";
            m.bits_per_symbol = 1;
            m.points = {cplx(-1.0, 0.0), cplx(1.0, 0.0)};
            break;
        }
        case ModScheme::Qpsk: {
            m.name = "qpsk";
            m.bits_per_symbol = 2;
            const double a = 1.0 / std::sqrt(2.0);
            m.points.resize(4);
            for (uint32_t label = 0; label < 4; ++label) {
                const double i = (label & 1) ? a : -a;
                const double q = (label & 2) ? a : -a;
                m.points[label] = cplx(i, q);
            }
            break;
        }
        case ModScheme::Psk8: {
            // Gray labels walk the circle: position p carries label p ^ (p>>1).
            m.name = "8psk";
            m.bits_per_symbol = 3;
            m.points.resize(8);
            for (uint32_t p = 0; p < 8; ++p) {
                const uint32_t label = p ^ (p >> 1);
                const double ang = 2.0 * kPi * p / 8.0;
                m.points[label] = cplx(std::cos(ang), std::sin(ang));
            }
            break;
        }
        case ModScheme::Qam16: {
            // Per-axis 2-bit Gray mapping: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
            m.name = "16qam";
            m.bits_per_symbol = 4;
            const double s = 1.0 / std::sqrt(10.0);
            auto level = [](uint32_t two_bits) {
                switch (two_bits) {
                    case 0: return -3.0;
                    case 1: return -1.0;
                    case 3: return 1.0;
                    default: return 3.0;  // 2
                }
            };
            m.points.resize(16);
            for (uint32_t label = 0; label < 16; ++label)
                m.points[label] = cplx(level(label & 3) * s, level((label >> 2) & 3) * s);
            break;
        }
    }
    return m;
}

inline Modulation make_modulation(const std::string& name) {
    if (name == "bpsk") return make_modulation(ModScheme::Bpsk);
    if (name == "qpsk") return make_modulation(ModScheme::Qpsk);
    if (name == "8psk") return make_modulation(ModScheme::Psk8);
    if (name == "16qam") return make_modulation(ModScheme::Qam16);
    throw std::invalid_argument("make_modulation: unknown scheme '" + name + "'");
}

}  // namespace isikit
