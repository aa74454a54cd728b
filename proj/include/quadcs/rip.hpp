#pragma once

// sigma_v via circulant diagonalization, concentration-of-measure checks over chipping
// seeds, the RIP sample-count and bandwidth bounds, and least-squares fits of the
// empirical bandwidth law.

#include <cmath>
#include <cstdint>
#include <vector>

#include "quadcs/chips.hpp"
#include "quadcs/fft.hpp"
#include "quadcs/operator.hpp"
#include "quadcs/rng.hpp"

namespace quadcs {

// sigma(u) = n^-1/2 max_k |DFT(u)[k]|: the spectral norm of the normalized circulant
// n^-1/2 C(u), whose eigenvalues are n^-1/2 DFT(u).
inline double sigma_of_spectrum(const CVector& u) {
    require_dim(u.size() > 0, "sigma: empty vector");
    return fft::fft(u).cwiseAbs().maxCoeff() / std::sqrt(double(u.size()));
}

// sigma_v = sigma(Y^ v). Homogeneous in v; for ||v|| = 1 this is the quantity in the
// concentration bound.
inline double sigma_v(const FrequencyDictionary& dict, const CVector& v) { return sigma_of_spectrum(dict.apply(v)); }

// n^-1/2 C(u) with C_ij = u[(i + j) mod n] (each row is the previous one shifted left).
inline CMatrix normalized_left_circulant(const CVector& u) {
    const Index n = u.size();
    check_dense_guard(static_cast<std::size_t>(n), "circulant");
    CMatrix c(n, n);
    const double s = 1.0 / std::sqrt(double(n));
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) c(i, j) = s * u[(i + j) % n];
    return c;
}

// 4 e^4 exp(-M eps / (16 sigma^2)).
inline double com_bound(std::size_t m, double eps, double sigma) {
    return 4.0 * std::exp(4.0) * std::exp(-double(m) * eps / (16.0 * sigma * sigma));
}

// Smallest eps for which the bound is stated: 64 sigma^2 / M.
inline double com_validity_floor(std::size_t m, double sigma) { return 64.0 * sigma * sigma / double(m); }

struct ComResult {
    std::size_t trials = 0;
    std::size_t failures = 0;
    double empirical_failure = 0.0;
    double bound = 0.0;
    double sigma = 0.0;
    double eps = 0.0;
    double mean_ratio = 0.0;  // mean ||M^ v||^2 / ||v||^2
    bool valid = false;       // eps and M inside the stated range
    bool bound_respected = true;
};

// Fix v, draw `trials` chipping sequences (keys derived from base_seed), and count how often
// ||M^ v||^2 leaves [(1 - eps), (1 + eps)] ||v||^2.
inline ComResult com_check(const FrequencyDictionary& dict, const CVector& v, std::size_t m, double eps,
                           std::size_t trials, std::uint64_t base_seed) {
    require_dim(static_cast<std::size_t>(v.size()) == dict.atoms(), "com_check: vector length != N");
    const double vn2 = v.squaredNorm();
    require(vn2 > 0.0, "com_check: zero vector");
    ComResult out;
    out.trials = trials;
    out.eps = eps;
    out.sigma = sigma_v(dict, v / std::sqrt(vn2));
    out.valid = eps >= com_validity_floor(m, out.sigma) && double(m) >= 64.0 * out.sigma * out.sigma;
    out.bound = com_bound(m, eps, out.sigma);
    const CVector s = dict.synthesize(v);
    double sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto chip = ChippingSequence::random(derive_key(base_seed, {t}), dict.bins(), dict.grid().bandwidth);
        const MeasurementOperator op(dict, chip, m);
        const double ratio = op.apply_nyquist(s).squaredNorm() / vn2;
        sum += ratio;
        if (ratio < 1.0 - eps || ratio > 1.0 + eps) ++out.failures;
    }
    out.empirical_failure = trials ? double(out.failures) / double(trials) : 0.0;
    out.mean_ratio = trials ? sum / double(trials) : 0.0;
    out.bound_respected = !(out.valid && out.bound < 1.0) || out.empirical_failure <= out.bound;
    return out;
}

namespace detail {
inline double rip_bracket(double k, double n, double eta) {
    return k * std::log(std::exp(1.0) * n / k) + 2.0 * std::log(k) + std::log(1.0 / eta) + 6.08;
}
inline void check_rip_params(double k, double n, double delta, double eta) {
    require(k >= 1.0, "rip bound: K must be >= 1");
    require(k <= n, "rip bound: K exceeds N");
    require(delta > 0.0 && delta < 1.0, "rip bound: delta must lie in (0, 1)");
    require(eta > 0.0 && eta < 1.0, "rip bound: eta must lie in (0, 1)");
}
}  // namespace detail

// M_min = ceil(32 / delta * K (K ln(eN/K) + 2 ln K + ln(1/eta) + 6.08)).
inline std::size_t rip_sample_bound(std::size_t k, std::size_t n, double delta, double eta) {
    detail::check_rip_params(double(k), double(n), delta, eta);
    const double v = 32.0 / delta * double(k) * detail::rip_bracket(double(k), double(n), eta);
    return static_cast<std::size_t>(std::ceil(v - 1e-9));
}

// B_cs_min = 32 / delta * (K / T) (K ln(eBT/K) + 2 ln K + ln(1/eta) + 6.08).
inline double bcs_bound(std::size_t k, double period, double bandwidth, double delta, double eta) {
    detail::check_rip_params(double(k), bandwidth * period, delta, eta);
    return 32.0 / delta * (double(k) / period) * detail::rip_bracket(double(k), bandwidth * period, eta);
}

struct LawPoint {
    double k = 0.0;
    double period = 0.0;
    double bandwidth = 0.0;
    double bcs = 0.0;  // minimum B_cs found
};

struct LawFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double log_base = 0.0;
    std::size_t points = 0;
};

// Abscissa (K/T) log_base(BT/K).
inline double law_abscissa(const LawPoint& p, double log_base) {
    return (p.k / p.period) * std::log(p.bandwidth * p.period / p.k) / std::log(log_base);
}

// Ordinary least squares of B_cs against (K/T) log(BT/K).
inline LawFit fit_bcs_law(const std::vector<LawPoint>& pts, double log_base = std::exp(1.0)) {
    require(pts.size() >= 3, "fit_bcs_law: need at least three points");
    require(log_base > 1.0, "fit_bcs_law: log base must exceed 1");
    const auto n = double(pts.size());
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
        mx += law_abscissa(p, log_base);
        my += p.bcs;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& p : pts) {
        const double dx = law_abscissa(p, log_base) - mx;
        const double dy = p.bcs - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    require(sxx > 1e-12 * std::max(1.0, mx * mx) * n, "fit_bcs_law: degenerate abscissa");
    LawFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    f.log_base = log_base;
    f.points = pts.size();
    return f;
}

}  // namespace quadcs
