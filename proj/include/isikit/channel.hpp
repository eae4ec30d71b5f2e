#pragma once

// Channel definitions and random channel generation.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "isikit/spectral.hpp"

namespace isikit {

// Causal channel impulse response h (origin 0) plus the complex noise
// variance N0 of the additive noise, y_k = sum_l h_l x_{k-l} + n_k.
struct Cir {
    TapVector h;
    double n0 = 1.0;

    int length() const { return h.size(); }

    Cir() = default;
    Cir(TapVector taps, double noise) : h(std::move(taps)), n0(noise) {
        if (h.empty()) throw std::invalid_argument("Cir: empty impulse response");
        if (h.origin != 0) throw std::invalid_argument("Cir: impulse response must be causal (origin 0)");
        if (!(n0 > 0.0)) throw std::invalid_argument("Cir: N0 must be positive");
    }
};

enum class StdChannel { Epr4, ProakisC };

inline Cir standard_channel(StdChannel name, double n0) {
    switch (name) {
        case StdChannel::Epr4:
            return Cir(TapVector::real({0.5, 0.5, -0.5, -0.5}), n0);
        case StdChannel::ProakisC:
            return Cir(TapVector::real({0.227, 0.46, 0.688, 0.46, 0.227}), n0);
    }
    throw std::invalid_argument("standard_channel: unknown name");
}

inline Cir standard_channel(const std::string& name, double n0) {
    if (name == "epr4") return standard_channel(StdChannel::Epr4, n0);
    if (name == "proakis_c") return standard_channel(StdChannel::ProakisC, n0);
    throw std::invalid_argument("standard_channel: unknown preset '" + name + "'");
}

namespace detail {

// splitmix64, used to decorrelate seed streams.
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// IID complex Gaussian taps, normalized to unit energy per realization.
// PRNG: mt19937_64 seeded with mix64(seed); one fixed stream per seed.
inline Cir random_iid_channel(int length, uint64_t seed, double n0 = 1.0) {
    if (length < 1) throw std::invalid_argument("random_iid_channel: length must be >= 1");
    std::mt19937_64 rng(detail::mix64(seed));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<cplx> taps(static_cast<size_t>(length));
    for (auto& t : taps) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        t = cplx(re, im);
    }
    double e = 0.0;
    for (const auto& t : taps) e += std::norm(t);
    const double scale = 1.0 / std::sqrt(e);
    for (auto& t : taps) t *= scale;
    return Cir(TapVector(std::move(taps), 0), n0);
}

// N0 for a unit-energy channel and unit-energy symbols at the given SNR.
inline double n0_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

}  // namespace isikit
