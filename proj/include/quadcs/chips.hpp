#pragma once

// Chipping sequence p[l] (one +-1 value per Nyquist interval, periodic over T) and its DFS.

#include <cstdint>
#include <vector>

#include "quadcs/fft.hpp"
#include "quadcs/rng.hpp"
#include "quadcs/types.hpp"

namespace quadcs {

struct ChippingSequence {
    RVector values;          // +-1, length P
    std::uint64_t seed = 0;
    double rate = 0.0;       // chip rate, equal to B

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }

    // i.i.d. equiprobable signs from CounterRng(derive_key(seed, {"chip"})).
    static ChippingSequence random(std::uint64_t seed, std::size_t n, double rate = 0.0) {
        require(n >= 1, "chipping sequence: length must be >= 1");
        ChippingSequence c;
        c.seed = seed;
        c.rate = rate;
        c.values.resize(static_cast<Index>(n));
        CounterRng rng(derive_key(seed, {0x63686970ULL}));
        for (Index i = 0; i < c.values.size(); ++i) c.values[i] = rng.sign();
        return c;
    }

    // p == +1 everywhere; reduces the operator to band selection of the dictionary spectrum.
    static ChippingSequence constant(std::size_t n, double rate = 0.0) {
        require(n >= 1, "chipping sequence: length must be >= 1");
        ChippingSequence c;
        c.rate = rate;
        c.values = RVector::Ones(static_cast<Index>(n));
        return c;
    }

    static ChippingSequence from_values(std::vector<double> v, double rate = 0.0) {
        require(!v.empty(), "chipping sequence: length must be >= 1");
        ChippingSequence c;
        c.rate = rate;
        c.values = Eigen::Map<RVector>(v.data(), static_cast<Index>(v.size()));
        for (Index i = 0; i < c.values.size(); ++i)
            require(c.values[i] == 1.0 || c.values[i] == -1.0, "chipping sequence: entries must be +1 or -1");
        return c;
    }
};

// c_p[k] = sum_l p[l] exp(-j 2 pi k l / P).
inline CVector dfs_spectrum(const ChippingSequence& p) {
    CVector c = p.values.cast<cplx>();
    fft::forward(c);
    return c;
}

}  // namespace quadcs
