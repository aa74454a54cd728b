#pragma once

// Thin FFTW wrapper.
//
// Plans are created once per (length, direction) with FFTW_ESTIMATE | FFTW_UNALIGNED
// and cached for the life of the process. Planning is serialized by a mutex;
// execution uses fftw_execute_dft, which is thread-safe, and the same plan is used
// for every call of a given size, so results are bitwise reproducible regardless of
// which thread runs them or how the buffer is aligned.

#include <fftw3.h>

#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "quadcs/types.hpp"

namespace quadcs::fft {

namespace detail {

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::vector<cplx> scratch(n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan == nullptr) throw ConfigError("fftw: could not plan transform");
        plans_.emplace(key, plan);
        return plan;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

inline void execute(std::span<cplx> data, int sign) {
    if (data.empty()) return;
    fftw_plan plan = PlanCache::instance().get(data.size(), sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
}

}  // namespace detail

// X[k] = sum_n x[n] exp(-j 2 pi k n / N), unnormalized, in place.
inline void forward(std::span<cplx> data) { detail::execute(data, FFTW_FORWARD); }

// x[n] = sum_k X[k] exp(+j 2 pi k n / N), unnormalized, in place.
inline void backward(std::span<cplx> data) { detail::execute(data, FFTW_BACKWARD); }

inline void forward(CVector& v) { forward(std::span<cplx>(v.data(), static_cast<std::size_t>(v.size()))); }
inline void backward(CVector& v) { backward(std::span<cplx>(v.data(), static_cast<std::size_t>(v.size()))); }

inline CVector fft(CVector v) {
    forward(v);
    return v;
}

// Normalized inverse: ifft(fft(x)) == x.
inline CVector ifft(CVector v) {
    backward(v);
    if (v.size() > 0) v /= static_cast<double>(v.size());
    return v;
}

// Signed frequency index of DFT bin k for length n: k in [-n/2, n/2).
inline long signed_bin(std::size_t k, std::size_t n) {
    const long kk = static_cast<long>(k);
    const long nn = static_cast<long>(n);
    return kk >= (nn + 1) / 2 ? kk - nn : kk;
}

// Storage index of signed frequency f for length n.
inline std::size_t bin_index(long f, std::size_t n) {
    const long nn = static_cast<long>(n);
    long r = f % nn;
    if (r < 0) r += nn;
    return static_cast<std::size_t>(r);
}

}  // namespace quadcs::fft
