#pragma once

// Evaluation quantities: reconstruction error, success probability, SNRs, amplitude and
// phase errors of the synthesized envelope, and delay hit rate.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "quadcs/types.hpp"
#include "quadcs/waveforms.hpp"

namespace quadcs {

// Reported in place of +inf for noise-free or error-free ensembles.
inline constexpr double kSnrCapDb = 300.0;
inline constexpr double kSuccessThreshold = 1e-6;

// E_r = ||v* - v|| / ||v||; NaN when v = 0 (undefined).
inline double relative_error(const CVector& truth, const CVector& estimate) {
    require_dim(truth.size() == estimate.size(), "relative_error: length mismatch");
    const double den = truth.norm();
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (estimate - truth).norm() / den;
}

inline double psr(const std::vector<bool>& success) {
    require(!success.empty(), "psr: need at least one trial");
    const auto hits = std::count(success.begin(), success.end(), true);
    return double(hits) / double(success.size());
}

// 10 log10(signal / noise), capped at kSnrCapDb.
inline double snr_db(double signal_energy, double noise_energy) {
    if (noise_energy <= 0.0) return kSnrCapDb;
    if (signal_energy <= 0.0) return -kSnrCapDb;
    return std::min(kSnrCapDb, db10(signal_energy / noise_energy));
}

// ISNR from the mean envelope power over the period: (mean |r|^2) / (N0 B), mean |r|^2 = mean |s~|^2 / 2.
inline double isnr_db(double mean_envelope_power, double n0, double bandwidth) {
    if (n0 <= 0.0) return kSnrCapDb;
    return snr_db(0.5 * mean_envelope_power, n0 * bandwidth);
}

// Ensemble SNR as a ratio of sums: sum_t ||signal_t||^2 / sum_t ||error_t||^2.
// OSNR uses (s_cs, n_cs); RSNR uses (Psi v, Psi (v - v*)).
class EnsembleSnr {
public:
    void add(double signal_energy, double error_energy) {
        signal_ += signal_energy;
        error_ += error_energy;
        ++count_;
    }
    std::size_t count() const { return count_; }
    double db() const {
        require(count_ > 0, "ensemble SNR: empty ensemble");
        return snr_db(signal_, error_);
    }

private:
    double signal_ = 0.0;
    double error_ = 0.0;
    std::size_t count_ = 0;
};

struct AmpPhaseError {
    double amplitude = 0.0;
    double phase = 0.0;  // radians
};

inline double wrap_phase(double d) {
    d = std::remainder(d, kTwoPi);  // [-pi, pi]
    if (d <= -kPi) d += kTwoPi;
    return d;
}

// ErrAmp = ||x - x*|| / ||x||; ErrPhase = (1/N) || wrap(Arg x - Arg x*) ||_2 over the N samples.
// With min_fraction > 0 only samples with |x| above that fraction of max |x| enter the phase sum
// (the normalization stays 1/N).
inline AmpPhaseError amp_phase_errors(const CVector& synth_true, const CVector& synth_est, double min_fraction = 0.0) {
    require_dim(synth_true.size() == synth_est.size(), "amp_phase_errors: length mismatch");
    const double den = synth_true.norm();
    require(den > 0.0, "amp_phase_errors: zero synthesis signal");
    AmpPhaseError e;
    e.amplitude = (synth_true - synth_est).norm() / den;
    const double floor = min_fraction * synth_true.cwiseAbs().maxCoeff();
    double acc = 0.0;
    for (Index i = 0; i < synth_true.size(); ++i) {
        if (min_fraction > 0.0 && std::abs(synth_true[i]) <= floor) continue;
        if (synth_true[i] == cplx{} && synth_est[i] == cplx{}) continue;  // arg(-0) would be pi
        const double d = wrap_phase(std::arg(synth_true[i]) - std::arg(synth_est[i]));
        acc += d * d;
    }
    e.phase = std::sqrt(acc) / double(synth_true.size());
    return e;
}

struct HitResult {
    std::size_t hits = 0;
    double rate = 0.0;
};

// OneToOne: each true target absorbs at most one estimate. Any: every estimate inside some
// target's window counts, so split peaks around one off-grid target score twice.
enum class HitMatching { OneToOne, Any };

// The K largest coefficients of v* (K = number of true targets) are matched to true delays
// within +-delta. Estimates are taken in decreasing magnitude and the one-to-one match is a
// maximum matching (augmenting paths), so the hit count never decreases as delta grows.
inline HitResult hit_rate(const CVector& estimate, const TargetScene& scene, const NyquistGrid& grid, double delta,
                          HitMatching matching = HitMatching::OneToOne) {
    require(delta >= 0.0, "hit_rate: delta must be non-negative");
    HitResult out;
    const std::size_t k = scene.sparsity();
    if (k == 0) return out;
    std::vector<Index> order(static_cast<std::size_t>(estimate.size()));
    std::iota(order.begin(), order.end(), Index{0});
    const std::size_t take = std::min<std::size_t>(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(take), order.end(), [&](Index a, Index b) {
        const double ma = std::abs(estimate[a]);
        const double mb = std::abs(estimate[b]);
        return ma != mb ? ma > mb : a < b;
    });
    const double slack = 1e-9 * grid.tau0();
    std::vector<std::vector<std::size_t>> adj(take);
    for (std::size_t e = 0; e < take; ++e) {
        if (estimate[order[e]] == cplx{0.0, 0.0}) continue;
        const double d = grid.delay(static_cast<std::size_t>(order[e]));
        std::vector<std::pair<double, std::size_t>> cand;
        for (std::size_t t = 0; t < k; ++t) {
            const double dist = std::abs(d - scene.targets[t].delay);
            if (dist <= delta + slack) cand.emplace_back(dist, t);
        }
        std::sort(cand.begin(), cand.end());
        for (const auto& c : cand) adj[e].push_back(c.second);
    }
    if (matching == HitMatching::Any) {
        for (const auto& a : adj)
            if (!a.empty()) ++out.hits;
        out.rate = double(out.hits) / double(k);
        return out;
    }
    std::vector<long> owner(k, -1);
    std::vector<bool> seen;
    auto augment = [&](auto&& self, std::size_t e) -> bool {
        for (std::size_t t : adj[e]) {
            if (seen[t]) continue;
            seen[t] = true;
            if (owner[t] < 0 || self(self, static_cast<std::size_t>(owner[t]))) {
                owner[t] = static_cast<long>(e);
                return true;
            }
        }
        return false;
    };
    for (std::size_t e = 0; e < take; ++e) {
        seen.assign(k, false);
        if (augment(augment, e)) ++out.hits;
    }
    out.rate = double(out.hits) / double(k);
    return out;
}

struct TrialMetrics {
    double relative_error = 0.0;
    bool success = false;
    double isnr_db = kSnrCapDb;
    double osnr_db = kSnrCapDb;
    double rsnr_db = kSnrCapDb;
    double err_amp = 0.0;
    double err_phase = 0.0;
    std::size_t hits = 0;
    double hit_rate = 0.0;
    // Energies kept so ensemble SNRs can be formed as ratios of sums.
    double clean_measurement_energy = 0.0;
    double noise_measurement_energy = 0.0;
    double synthesis_energy = 0.0;
    double synthesis_error_energy = 0.0;
};

}  // namespace quadcs
