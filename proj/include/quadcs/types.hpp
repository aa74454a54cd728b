#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace quadcs {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kJ{0.0, 1.0};

// Invalid parameters or inconsistent configuration.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Vector or matrix sizes do not agree.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// A dense construction was requested for a size above its guard.
class GuardError : public std::length_error {
public:
    explicit GuardError(const std::string& what) : std::length_error(what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ConfigError(what);
}

inline void require_dim(bool cond, const std::string& what) {
    if (!cond) throw DimensionError(what);
}

// Relative 2-norm error, ||a - b|| / ||b||; absolute when b is zero.
template <typename A, typename B>
double relative_difference(const A& a, const B& b) {
    const double den = b.norm();
    const double num = (a - b).norm();
    return den > 0.0 ? num / den : num;
}

inline double db10(double ratio) { return 10.0 * std::log10(ratio); }
inline double from_db10(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace quadcs
