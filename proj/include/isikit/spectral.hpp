#pragma once

// Complex tap sequences and DTFT-domain numerics on a fixed frequency grid.
// Every (1/2pi) * integral over [-pi, pi) in the rate formulas is realized
// as a mean over a uniform grid, which is spectrally exact for the
// band-limited integrands that arise from FIR filters.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace isikit {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// A complex coefficient sequence with an explicit time origin, so two-sided
// (non-causal) filters are first-class. taps[i] sits at delay (i - origin).
struct TapVector {
    std::vector<cplx> taps;
    int origin = 0;

    TapVector() = default;
    TapVector(std::vector<cplx> t, int o = 0) : taps(std::move(t)), origin(o) {}

    int size() const { return static_cast<int>(taps.size()); }
    bool empty() const { return taps.empty(); }
    int min_delay() const { return -origin; }
    int max_delay() const { return size() - 1 - origin; }

    // Coefficient at a given delay, zero outside the stored range.
    cplx at_delay(int d) const {
        const int i = d + origin;
        return (i >= 0 && i < size()) ? taps[static_cast<size_t>(i)] : cplx{0.0, 0.0};
    }

    double energy() const {
        double e = 0.0;
        for (const auto& t : taps) e += std::norm(t);
        return e;
    }

    static TapVector real(std::initializer_list<double> v, int origin = 0) {
        std::vector<cplx> t;
        t.reserve(v.size());
        for (double x : v) t.emplace_back(x, 0.0);
        return TapVector(std::move(t), origin);
    }
};

// Uniform grid omega_n = -pi + 2*pi*n/N covering exactly one period.
struct FrequencyGrid {
    int n_points = 0;
    std::vector<double> omegas;

    static FrequencyGrid make(int n) {
        if (n < 2) throw std::invalid_argument("FrequencyGrid: need at least 2 points");
        FrequencyGrid g;
        g.n_points = n;
        g.omegas.resize(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) g.omegas[static_cast<size_t>(k)] = -kPi + 2.0 * kPi * k / n;
        return g;
    }
};

struct Spectrum {
    FrequencyGrid grid;
    std::vector<cplx> values;

    int n_points() const { return grid.n_points; }
};

namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT, kernel exp(sign * j*2*pi*k*m/N), unnormalized.
inline void fft_pow2(std::vector<cplx>& a, int sign) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * kPi / static_cast<double>(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline int floor_mod(int x, int n) {
    int m = x % n;
    return m < 0 ? m + n : m;
}

}  // namespace detail

// DTFT with the positive-exponent convention: S[n] = sum_l taps[l] * exp(j*omega_n*(l-origin)).
inline Spectrum dtft(const TapVector& x, const FrequencyGrid& grid) {
    const int n = grid.n_points;
    Spectrum s;
    s.grid = grid;
    s.values.assign(static_cast<size_t>(n), cplx{0.0, 0.0});
    if (x.empty()) return s;
    if (detail::is_pow2(n)) {
        // exp(j*omega_k*d) = exp(-j*pi*d) * exp(j*2*pi*k*d/N); fold delays mod N.
        std::vector<cplx> a(static_cast<size_t>(n), cplx{0.0, 0.0});
        for (int i = 0; i < x.size(); ++i) {
            const int d = i - x.origin;
            const double ph = -kPi * d;
            a[static_cast<size_t>(detail::floor_mod(d, n))] +=
                x.taps[static_cast<size_t>(i)] * cplx(std::cos(ph), std::sin(ph));
        }
        detail::fft_pow2(a, +1);
        s.values = std::move(a);
    } else {
        for (int k = 0; k < n; ++k) {
            const double w = grid.omegas[static_cast<size_t>(k)];
            cplx acc{0.0, 0.0};
            for (int i = 0; i < x.size(); ++i) {
                const double ph = w * (i - x.origin);
                acc += x.taps[static_cast<size_t>(i)] * cplx(std::cos(ph), std::sin(ph));
            }
            s.values[static_cast<size_t>(k)] = acc;
        }
    }
    return s;
}

// Riemann-sum inverse: tap[l] = (1/N) sum_n values[n] * exp(-j*omega_n*l) for l in [lo, hi].
inline TapVector idtft(const Spectrum& s, int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("idtft: empty index range");
    const int n = s.n_points();
    TapVector out;
    out.origin = -lo;
    out.taps.assign(static_cast<size_t>(hi - lo + 1), cplx{0.0, 0.0});
    if (detail::is_pow2(n)) {
        std::vector<cplx> a = s.values;
        detail::fft_pow2(a, -1);
        for (int l = lo; l <= hi; ++l) {
            const double sgn = (l % 2 == 0) ? 1.0 : -1.0;  // exp(j*pi*l)
            out.taps[static_cast<size_t>(l - lo)] =
                sgn * a[static_cast<size_t>(detail::floor_mod(l, n))] / static_cast<double>(n);
        }
    } else {
        for (int l = lo; l <= hi; ++l) {
            cplx acc{0.0, 0.0};
            for (int k = 0; k < n; ++k) {
                const double ph = -s.grid.omegas[static_cast<size_t>(k)] * l;
                acc += s.values[static_cast<size_t>(k)] * cplx(std::cos(ph), std::sin(ph));
            }
            out.taps[static_cast<size_t>(l - lo)] = acc / static_cast<double>(n);
        }
    }
    return out;
}

// (1/2pi) * integral over one period, as the grid mean.
inline cplx mean_integral(const Spectrum& s) {
    cplx acc{0.0, 0.0};
    for (const auto& v : s.values) acc += v;
    return acc / static_cast<double>(s.n_points());
}

inline double mean_real(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

// Linear convolution with origin bookkeeping.
inline TapVector convolve(const TapVector& a, const TapVector& b) {
    if (a.empty() || b.empty()) return TapVector{};
    TapVector out;
    out.origin = a.origin + b.origin;
    out.taps.assign(static_cast<size_t>(a.size() + b.size() - 1), cplx{0.0, 0.0});
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < b.size(); ++j)
            out.taps[static_cast<size_t>(i + j)] += a.taps[static_cast<size_t>(i)] * b.taps[static_cast<size_t>(j)];
    return out;
}

// Sum of two sequences with delay alignment.
inline TapVector add_aligned(const TapVector& a, const TapVector& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    const int lo = std::min(a.min_delay(), b.min_delay());
    const int hi = std::max(a.max_delay(), b.max_delay());
    TapVector out;
    out.origin = -lo;
    out.taps.assign(static_cast<size_t>(hi - lo + 1), cplx{0.0, 0.0});
    for (int d = lo; d <= hi; ++d) out.taps[static_cast<size_t>(d - lo)] = a.at_delay(d) + b.at_delay(d);
    return out;
}

}  // namespace isikit
