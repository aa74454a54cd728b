#pragma once

// Counter-based random streams.
//
// Every stream is a 64-bit key; draw i of the stream is SplitMix64(key + i * golden).
// The generator and the uniform/normal transforms are implemented here (not via
// <random> distributions) so that a (key, counter) pair maps to the same value on
// every platform and standard library.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <limits>

#include "quadcs/types.hpp"

namespace quadcs {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derive a child key from a parent key and a path of labels.
inline std::uint64_t derive_key(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t k = splitmix64(base + kGolden);
    for (std::uint64_t p : path) k = splitmix64(k ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
    return k;
}

// Stable 64-bit label for a double (bit pattern), used in seed paths.
inline std::uint64_t label_of(double x) {
    std::uint64_t bits = 0;
    static_assert(sizeof bits == sizeof x);
    std::memcpy(&bits, &x, sizeof bits);
    return bits;
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() {
        ++counter_;
        return splitmix64(key_ + counter_ * kGolden);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1].
    double uniform_open_closed() { return 1.0 - uniform(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Lemire-style rejection keeps the draw unbiased.
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // +1 or -1 with equal probability (top bit of one draw).
    double sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

    // Standard normal via Box-Muller; both variates are used.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open_closed();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        spare_ = rad * std::sin(kTwoPi * u2);
        has_spare_ = true;
        return rad * std::cos(kTwoPi * u2);
    }

    // Circular complex Gaussian with E|z|^2 = variance.
    cplx complex_normal(double variance) {
        const double s = std::sqrt(variance / 2.0);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace quadcs
