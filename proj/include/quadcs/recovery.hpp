#pragma once

// Sparse recovery: basis pursuit denoise by Pareto-curve root finding with spectral
// projected gradient subproblems (van den Berg and Friedlander's SPGL1 scheme), basis
// pursuit as BPDN with a vanishing epsilon, and orthogonal matching pursuit.
//
// Everything works in native complex arithmetic. The one-norm ball projection shrinks
// magnitudes and keeps phases, so the solver commutes with a global phase rotation of b.
// The data are normalized by ||b|| internally, which makes tolerances scale-free.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "quadcs/types.hpp"

namespace quadcs {

template <typename Op>
concept LinearOperator = requires(const Op& op, const CVector& v) {
    { op.rows() } -> std::convertible_to<Index>;
    { op.cols() } -> std::convertible_to<Index>;
    { op.apply(v) } -> std::convertible_to<CVector>;
    { op.adjoint(v) } -> std::convertible_to<CVector>;
};

struct DenseOperator {
    CMatrix a;
    Index rows() const { return a.rows(); }
    Index cols() const { return a.cols(); }
    CVector apply(const CVector& x) const { return a * x; }
    CVector adjoint(const CVector& y) const { return a.adjoint() * y; }
};

enum class SolverStatus { Converged, IterationLimit, Infeasible };

inline std::string to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::Converged: return "converged";
        case SolverStatus::IterationLimit: return "iteration_limit";
        case SolverStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

struct TraceRow {
    int iteration = 0;
    double residual = 0.0;
    double l1 = 0.0;
    double tau = 0.0;
    double gap = 0.0;
};

struct SolverResult {
    CVector x;
    double residual_norm = 0.0;  // ||b - A x||, recomputed
    double l1_norm = 0.0;        // sum |x_n|, recomputed
    int iterations = 0;
    int newton_updates = 0;
    bool converged = false;
    bool polished = false;
    SolverStatus status = SolverStatus::IterationLimit;
    double wall_seconds = 0.0;
    std::vector<TraceRow> trace;
};

struct SpgOptions {
    int max_iterations = 10000;
    double feasibility_tol = 1e-4;  // residual within sigma (1 +- tol)
    double optimality_tol = 1e-4;   // duality gap, relative to ||b||^2
    int memory = 3;                 // nonmonotone line search window
    double gamma = 1e-4;            // sufficient decrease
    double step_min = 1e-16;
    double step_max = 1e5;
    bool polish = true;             // BP mode: least squares on the detected support
    double polish_tol = 1e-3;       // accepted if its l1 norm is within this of the dual bound
    bool trace = false;
};

inline double l1_norm(const CVector& x) { return x.cwiseAbs().sum(); }

// Euclidean projection onto {x : sum |x_n| <= tau}: project the magnitudes onto the
// l1 ball of R^N_+ and keep the phases.
inline CVector project_l1_ball(const CVector& x, double tau) {
    const Index n = x.size();
    if (tau <= 0.0) return CVector::Zero(n);
    RVector mag = x.cwiseAbs();
    if (mag.sum() <= tau) return x;
    std::vector<double> u(mag.data(), mag.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double csum = 0.0;
    double theta = 0.0;
    for (Index i = 0; i < n; ++i) {
        csum += u[static_cast<std::size_t>(i)];
        const double t = (csum - tau) / double(i + 1);
        if (i + 1 == n || u[static_cast<std::size_t>(i + 1)] <= t) {
            theta = t;
            break;
        }
    }
    CVector out(n);
    for (Index i = 0; i < n; ++i) {
        const double m = mag[i];
        out[i] = (m > theta) ? x[i] * ((m - theta) / m) : cplx{0.0, 0.0};
    }
    return out;
}

namespace detail {

// Least squares on a column subset via Householder QR.
template <LinearOperator Op>
CVector support_least_squares(const Op& a, const CVector& b, const std::vector<Index>& support, CMatrix* cols_out = nullptr) {
    CMatrix cols(a.rows(), static_cast<Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j)
        cols.col(static_cast<Index>(j)) = a.apply(CVector::Unit(a.cols(), support[j]));
    CVector xs = cols.colPivHouseholderQr().solve(b);
    CVector x = CVector::Zero(a.cols());
    for (std::size_t j = 0; j < support.size(); ++j) x[support[j]] = xs[static_cast<Index>(j)];
    if (cols_out) *cols_out = std::move(cols);
    return x;
}

template <LinearOperator Op>
SolverResult finalize(const Op& a, const CVector& b, SolverResult res,
                      std::chrono::steady_clock::time_point start) {
    res.residual_norm = (b - a.apply(res.x)).norm();
    res.l1_norm = l1_norm(res.x);
    res.converged = res.status == SolverStatus::Converged;
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace detail

// min ||x||_1  s.t. ||b - A x||_2 <= sigma.
// bp_mode enables the support polish used when sigma is a vanishing equality slack.
template <LinearOperator Op>
SolverResult spg_bpdn(const Op& a, const CVector& b_in, double sigma_in, const SpgOptions& opt = {},
                      bool bp_mode = false) {
    const auto start = std::chrono::steady_clock::now();
    require_dim(b_in.size() == a.rows(), "spg_bpdn: measurement length != operator rows");
    require(sigma_in >= 0.0, "spg_bpdn: sigma must be non-negative");
    SolverResult res;
    res.x = CVector::Zero(a.cols());
    const double b_norm = b_in.norm();
    if (b_norm == 0.0 || sigma_in >= b_norm) {
        res.status = SolverStatus::Converged;
        return detail::finalize(a, b_in, std::move(res), start);
    }
    const CVector b = b_in / b_norm;
    const double sigma = sigma_in / b_norm;

    CVector x = CVector::Zero(a.cols());
    CVector ax = CVector::Zero(a.rows());
    CVector r = b;
    CVector g = a.adjoint(r);  // A^H r = -grad f
    double tau = 0.0;
    double f = 0.5 * r.squaredNorm();
    double step = 1.0;
    std::vector<double> f_hist(static_cast<std::size_t>(std::max(1, opt.memory)), f);
    int iter = 0;
    bool done = false;

    auto refresh = [&]() {
        ax = a.apply(x);
        r = b - ax;
        g = a.adjoint(r);
        f = 0.5 * r.squaredNorm();
    };

    while (true) {
        const double r_norm = std::sqrt(2.0 * f);
        const double g_norm = g.cwiseAbs().maxCoeff();
        const double gap = (r.dot(r - b)).real() + tau * g_norm;
        const double r_gap = std::abs(gap) / std::max(1.0, f);
        const double err1 = std::abs(r_norm - sigma) / std::max(sigma, std::numeric_limits<double>::min());
        const double err2 = std::abs(f - 0.5 * sigma * sigma) / std::max(1.0, f);
        if (opt.trace) res.trace.push_back({iter, r_norm * b_norm, l1_norm(x) * b_norm, tau * b_norm, gap * b_norm * b_norm});

        if (err1 <= opt.feasibility_tol) {
            res.status = SolverStatus::Converged;
            done = true;
        }
        // The subproblem for this tau is solved well enough once the gap is small next to
        // the remaining distance to the root.
        const bool sub_done = r_gap <= std::max(opt.optimality_tol * 1e-2, 0.1 * err2) || r_gap <= 1e-14;
        if (!done && sub_done && r_norm > sigma && g_norm <= 1e-12 * r_norm) {
            // Least-squares point reached with residual above sigma.
            res.status = SolverStatus::Infeasible;
            done = true;
        }
        const bool try_polish = bp_mode && opt.polish && tau > 0.0 &&
                                (sub_done || res.status == SolverStatus::Converged) &&
                                res.status != SolverStatus::Infeasible;
        if (try_polish) {
            // Least squares on the significant entries. Accepted when feasible and its l1 norm
            // is within polish_tol of a lower bound on the optimum: tau (the Pareto root is
            // approached from below) or the dual bound from the current residual.
            // Thresholds descend so that weak but real entries are not dropped.
            const double xmax = x.cwiseAbs().maxCoeff();
            const double lower = std::max(std::min(tau, l1_norm(x)), b.dot(r).real() / g_norm);
            std::size_t last_size = 0;
            for (double level : {1e-3, 1e-5, 1e-7, 0.0}) {
                std::vector<Index> support;
                for (Index i = 0; i < x.size(); ++i)
                    if (std::abs(x[i]) > level * xmax) support.push_back(i);
                if (support.empty() || support.size() == last_size) continue;
                last_size = support.size();
                if (static_cast<Index>(support.size()) * 2 > a.rows()) break;
                const CVector xl = detail::support_least_squares(a, b, support);
                const double rl = (b - a.apply(xl)).norm();
                if (rl <= sigma * (1.0 + opt.feasibility_tol) && l1_norm(xl) <= lower * (1.0 + opt.polish_tol)) {
                    x = xl;
                    res.polished = true;
                    res.status = SolverStatus::Converged;
                    done = true;
                    break;
                }
            }
        }
        if (done || iter >= opt.max_iterations) break;

        if (sub_done) {
            const double tau_old = tau;
            tau = std::max(0.0, tau + r_norm * (r_norm - sigma) / g_norm);
            ++res.newton_updates;
            if (tau < tau_old) {
                x = project_l1_ball(x, tau);
                refresh();
            }
            std::fill(f_hist.begin(), f_hist.end(), f);
        }

        // Spectral projected gradient step with nonmonotone backtracking along d.
        const CVector x_new = project_l1_ball(x + step * g, tau);
        const CVector d = x_new - x;
        const double gtd = -(g.dot(d)).real();  // <grad f, d>
        if (d.squaredNorm() == 0.0) {
            // Stationary for this tau; the next pass updates tau.
            ++iter;
            step = 1.0;
            continue;
        }
        const CVector ad = a.apply(d);
        const double f_max = *std::max_element(f_hist.begin(), f_hist.end());
        double alpha = 1.0;
        CVector r_try;
        double f_try = 0.0;
        for (int ls = 0;; ++ls) {
            r_try = r - alpha * ad;
            f_try = 0.5 * r_try.squaredNorm();
            if (f_try <= f_max + opt.gamma * alpha * gtd || ls >= 20) break;
            // Safeguarded quadratic interpolation.
            const double den = 2.0 * (f_try - f - alpha * gtd);
            double a_new = (den > 0.0) ? -gtd * alpha * alpha / den : alpha / 2.0;
            if (a_new < 0.1 * alpha || a_new > 0.9 * alpha) a_new = alpha / 2.0;
            alpha = a_new;
        }
        const CVector s = alpha * d;
        x += s;
        ax += alpha * ad;
        r = r_try;
        f = f_try;
        const CVector g_new = a.adjoint(r);
        const CVector y = g - g_new;  // grad difference
        const double sts = s.squaredNorm();
        const double sty = s.dot(y).real();
        step = (sty <= 0.0) ? opt.step_max : std::clamp(sts / sty, opt.step_min, opt.step_max);
        g = g_new;
        std::rotate(f_hist.begin(), f_hist.begin() + 1, f_hist.end());
        f_hist.back() = f;
        ++iter;
        // Periodically recompute the residual from scratch to limit drift.
        if (iter % 50 == 0) refresh();
    }
    res.iterations = iter;
    res.x = x * b_norm;
    return detail::finalize(a, b_in, std::move(res), start);
}

template <LinearOperator Op>
SolverResult solve_bpdn(const Op& a, const CVector& b, double epsilon, const SpgOptions& opt = {}) {
    require(epsilon >= 0.0, "solve_bpdn: epsilon must be non-negative");
    return spg_bpdn(a, b, epsilon, opt, false);
}

// Equality-constrained basis pursuit, realized as BPDN with epsilon = 1e-8 ||b||.
template <LinearOperator Op>
SolverResult solve_bp(const Op& a, const CVector& b, const SpgOptions& opt = {}) {
    return spg_bpdn(a, b, 1e-8 * b.norm(), opt, true);
}

// Orthogonal matching pursuit; ties go to the lowest index.
template <LinearOperator Op>
SolverResult solve_omp(const Op& a, const CVector& b, std::size_t k_max, double rel_tol = 1e-12) {
    const auto start = std::chrono::steady_clock::now();
    require(k_max >= 1, "solve_omp: K_max must be >= 1");
    require(static_cast<Index>(k_max) <= a.rows(), "solve_omp: K_max exceeds the number of measurements");
    require_dim(b.size() == a.rows(), "solve_omp: measurement length != operator rows");
    SolverResult res;
    res.x = CVector::Zero(a.cols());
    const double b_norm = b.norm();
    std::vector<Index> support;
    std::vector<bool> chosen(static_cast<std::size_t>(a.cols()), false);
    CVector r = b;
    CMatrix cols(a.rows(), 0);
    while (support.size() < k_max && r.norm() > rel_tol * b_norm && b_norm > 0.0) {
        const CVector c = a.adjoint(r);
        Index best = -1;
        double best_val = -1.0;
        for (Index i = 0; i < c.size(); ++i) {
            if (chosen[static_cast<std::size_t>(i)]) continue;
            const double v = std::abs(c[i]);
            if (v > best_val) {
                best_val = v;
                best = i;
            }
        }
        if (best < 0 || best_val == 0.0) break;
        chosen[static_cast<std::size_t>(best)] = true;
        support.push_back(best);
        cols.conservativeResize(Eigen::NoChange, cols.cols() + 1);
        cols.col(cols.cols() - 1) = a.apply(CVector::Unit(a.cols(), best));
        const CVector xs = cols.householderQr().solve(b);
        r = b - cols * xs;
        res.x.setZero();
        for (std::size_t j = 0; j < support.size(); ++j) res.x[support[j]] = xs[static_cast<Index>(j)];
        ++res.iterations;
    }
    res.status = SolverStatus::Converged;
    return detail::finalize(a, b, std::move(res), start);
}

// epsilon = sqrt(N N0 B).
inline double epsilon_from_noise(std::size_t n, double n0, double bandwidth) {
    require(n0 >= 0.0 && bandwidth >= 0.0, "epsilon_from_noise: N0 and B must be non-negative");
    return std::sqrt(double(n) * n0 * bandwidth);
}

inline void write_trace_csv(std::ostream& os, const SolverResult& res) {
    os << "iteration,residual,l1,tau,gap\n";
    os.precision(12);
    for (const auto& t : res.trace)
        os << t.iteration << ',' << t.residual << ',' << t.l1 << ',' << t.tau << ',' << t.gap << '\n';
}

}  // namespace quadcs
