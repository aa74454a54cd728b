#pragma once

// Radar baseband waveforms, target scenes and the waveform-matched dictionary.
//
// Conventions used throughout the library:
//  * The observation interval T is one period of a circular time axis; every
//    delay and convolution wraps modulo T.
//  * The Nyquist grid has P = B*T samples per period (tau0 = 1/B). The dictionary
//    holds N <= P atoms; atom i (0-based) is the waveform delayed by (i + 1) * tau0.
//  * Atoms are normalized to unit energy at the Nyquist rate, so sparse coefficients
//    carry a factor sqrt(E) where E is the Nyquist-sample energy of s0 (E = number of
//    bits/samples in the pulse for a unit-modulus waveform).
//  * "Analog" signals live on an oversampled circular grid of P*L samples. With
//    Synthesis::Bandlimited the waveform is the ideal (periodic) reconstruction of its
//    Nyquist samples; Synthesis::Direct evaluates the closed-form pulse at every
//    grid instant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "quadcs/fft.hpp"
#include "quadcs/rng.hpp"
#include "quadcs/types.hpp"

namespace quadcs {

enum class WaveformKind { Lfm, PhaseCoded };

inline std::string to_string(WaveformKind k) { return k == WaveformKind::Lfm ? "lfm" : "phase_coded"; }

inline WaveformKind waveform_kind_from_string(const std::string& s) {
    if (s == "lfm" || s == "LFM") return WaveformKind::Lfm;
    if (s == "phase_coded" || s == "zadoff_chu" || s == "zc") return WaveformKind::PhaseCoded;
    throw ConfigError("unknown waveform kind '" + s + "'");
}

// Zadoff-Chu phases phi_m (m = 0 .. length-1), reduced to [0, 2pi).
//   even length: pi * root * m^2 / length
//   odd length:  pi * root * m (m + 1) / length
inline std::vector<double> zadoff_chu_code(std::size_t length, int root) {
    require(length >= 1, "zadoff_chu_code: length must be >= 1");
    require(root != 0, "zadoff_chu_code: root must be nonzero");
    const auto n = static_cast<std::int64_t>(length);
    require(std::gcd(static_cast<std::int64_t>(root), n) == 1,
            "zadoff_chu_code: root " + std::to_string(root) + " shares a factor with length " +
                std::to_string(length));
    std::vector<double> phases(length);
    const std::int64_t modulus = 2 * n;
    for (std::int64_t m = 0; m < n; ++m) {
        const std::int64_t q = (n % 2 == 0) ? m * m : m * (m + 1);
        std::int64_t num = ((q % modulus) * (static_cast<std::int64_t>(root) % modulus)) % modulus;
        if (num < 0) num += modulus;
        phases[static_cast<std::size_t>(m)] = kPi * static_cast<double>(num) / static_cast<double>(n);
    }
    return phases;
}

struct WaveformSpec {
    WaveformKind kind = WaveformKind::Lfm;
    double pulse_width = 10.24e-6;  // Tp [s]
    double bandwidth = 100e6;       // B [Hz]
    std::vector<double> phase_code; // phi_m [rad], phase-coded only
    int zc_root = 1;

    static WaveformSpec lfm(double tp, double b) {
        WaveformSpec w;
        w.kind = WaveformKind::Lfm;
        w.pulse_width = tp;
        w.bandwidth = b;
        w.validate();
        return w;
    }

    static WaveformSpec phase_coded(double tp, double b, std::vector<double> code) {
        WaveformSpec w;
        w.kind = WaveformKind::PhaseCoded;
        w.pulse_width = tp;
        w.bandwidth = b;
        w.phase_code = std::move(code);
        w.validate();
        return w;
    }

    static WaveformSpec zadoff_chu(double tp, double b, int root = 1) {
        require(tp > 0.0 && b > 0.0, "waveform: pulse width and bandwidth must be positive");
        WaveformSpec w;
        w.kind = WaveformKind::PhaseCoded;
        w.pulse_width = tp;
        w.bandwidth = b;
        w.zc_root = root;
        w.phase_code = zadoff_chu_code(w.num_bits(), root);
        w.validate();
        return w;
    }

    double chirp_rate() const { return bandwidth / pulse_width; }
    double bit_width() const { return 1.0 / bandwidth; }

    // M_b = round(Tp * B); also the number of Nyquist samples inside the pulse.
    std::size_t num_bits() const { return static_cast<std::size_t>(std::llround(pulse_width * bandwidth)); }

    void validate() const {
        require(pulse_width > 0.0, "waveform: pulse width must be positive");
        require(bandwidth > 0.0, "waveform: bandwidth must be positive");
        require(num_bits() >= 1, "waveform: pulse shorter than one Nyquist interval");
        if (kind == WaveformKind::PhaseCoded) {
            require(phase_code.size() == num_bits(),
                    "waveform: phase code has " + std::to_string(phase_code.size()) +
                        " elements, expected M_b = " + std::to_string(num_bits()));
        }
    }
};

// s0(t): zero outside [0, Tp); unit modulus inside.
// Bit m (0-based) of a phase-coded pulse occupies [m Tb, (m + 1) Tb).
inline cplx baseband_sample(const WaveformSpec& w, double t) {
    const double tb = w.bit_width();
    const double guard = 1e-6 * tb;
    if (t < -guard || t >= w.pulse_width - guard) return {0.0, 0.0};
    if (w.kind == WaveformKind::Lfm) {
        const double u = t - w.pulse_width / 2.0;
        return std::polar(1.0, kPi * w.chirp_rate() * u * u);
    }
    auto m = static_cast<std::size_t>(std::max(0.0, std::floor((t + guard) / tb)));
    m = std::min(m, w.phase_code.size() - 1);
    return std::polar(1.0, w.phase_code[m]);
}

// Uniform (non-circular) sampling grid: t_i = start + i * step.
struct TimeGrid {
    double start = 0.0;
    double step = 1.0;
    std::size_t size = 0;

    // n samples covering one period [0, period).
    static TimeGrid circular(double period, std::size_t n) {
        require(period > 0.0 && n > 0, "time grid: period and size must be positive");
        return {0.0, period / static_cast<double>(n), n};
    }

    double time(std::size_t i) const { return start + step * static_cast<double>(i); }
    double rate() const { return 1.0 / step; }
    double period() const { return step * static_cast<double>(size); }
};

inline CVector baseband_waveform(const WaveformSpec& w, const TimeGrid& grid) {
    w.validate();
    require(grid.step > 0.0 && grid.step <= w.bit_width() * (1.0 + 1e-9),
            "baseband_waveform: grid step must not exceed the Nyquist interval 1/B");
    CVector out(static_cast<Index>(grid.size));
    for (std::size_t i = 0; i < grid.size; ++i) out[static_cast<Index>(i)] = baseband_sample(w, grid.time(i));
    return out;
}

// Nyquist samples s0[k] = s0(k / B), k = 0 .. M_b - 1.
inline CVector nyquist_samples(const WaveformSpec& w) {
    w.validate();
    const std::size_t nb = w.num_bits();
    CVector s(static_cast<Index>(nb));
    const double tb = w.bit_width();
    for (std::size_t k = 0; k < nb; ++k) {
        if (w.kind == WaveformKind::Lfm) {
            const double u = static_cast<double>(k) * tb - w.pulse_width / 2.0;
            s[static_cast<Index>(k)] = std::polar(1.0, kPi * w.chirp_rate() * u * u);
        } else {
            s[static_cast<Index>(k)] = std::polar(1.0, w.phase_code[k]);
        }
    }
    return s;
}

inline double nyquist_energy(const WaveformSpec& w) { return nyquist_samples(w).squaredNorm(); }

// Nyquist grid and dictionary layout for one observation interval.
struct NyquistGrid {
    double bandwidth = 100e6;  // B
    double period = 20.48e-6;  // T
    std::size_t atoms = 0;     // N
    std::size_t samples = 0;   // P = B T

    double tau0() const { return 1.0 / bandwidth; }
    double delay(std::size_t atom) const { return static_cast<double>(atom + 1) * tau0(); }

    // Dictionary for targets in (0, T - Tp]: N = floor(B (T - Tp)), P = B T.
    static NyquistGrid for_scene(double b, double t, double tp) {
        require(b > 0.0 && t > 0.0 && tp > 0.0, "nyquist grid: B, T and Tp must be positive");
        require(t > tp, "nyquist grid: observation interval must exceed the pulse width");
        NyquistGrid g;
        g.bandwidth = b;
        g.period = t;
        g.samples = static_cast<std::size_t>(std::llround(b * t));
        g.atoms = static_cast<std::size_t>(std::floor(b * (t - tp) + 1e-9));
        g.validate();
        return g;
    }

    // N atoms on an N-sample period.
    static NyquistGrid square(double b, std::size_t n) {
        NyquistGrid g;
        g.bandwidth = b;
        g.samples = n;
        g.atoms = n;
        g.period = static_cast<double>(n) / b;
        g.validate();
        return g;
    }

    void validate() const {
        require(atoms >= 1, "nyquist grid: N must be >= 1");
        require(atoms <= samples, "nyquist grid: N must not exceed the samples per period");
        require(std::abs(static_cast<double>(samples) * tau0() - period) <= 1e-9 * period,
                "nyquist grid: B*T must be an integer number of samples");
    }

    // Atom index (0-based) of an on-grid delay, or -1 if the delay is off the grid.
    long atom_of_delay(double t) const {
        const double q = t / tau0();
        const double r = std::round(q);
        if (std::abs(q - r) > 1e-6) return -1;
        const long n = static_cast<long>(r) - 1;
        if (n < 0 || n >= static_cast<long>(atoms)) return -1;
        return n;
    }
};

struct Target {
    double delay = 0.0;  // t_k [s]
    double gain = 1.0;   // v_k in (0, 1]
    double phase = 0.0;  // varphi_k [rad]
};

struct TargetScene {
    std::vector<Target> targets;
    bool on_grid = true;

    std::size_t sparsity() const { return targets.size(); }

    // Delays must lie in (0, T - Tp]; on-grid scenes must sit on multiples of tau0.
    void validate(const NyquistGrid& grid, double pulse_width) const {
        const double tmax = grid.period - pulse_width;
        const double slack = 1e-9 * grid.tau0();
        for (const auto& tg : targets) {
            require(tg.delay > 0.0 && tg.delay <= tmax + slack,
                    "scene: target delay " + std::to_string(tg.delay) + " outside (0, T - Tp]");
            if (on_grid) {
                const double q = tg.delay / grid.tau0();
                require(std::abs(q - std::round(q)) <= 1e-6, "scene: on-grid target delay is not a multiple of tau0");
            }
        }
    }
};

// Random scene: gains uniform on (0, 1], phases uniform on (0, 2pi]. On-grid delays are
// K distinct atoms drawn uniformly; off-grid delays are continuous uniform on [tau0, N tau0].
inline TargetScene random_scene(const NyquistGrid& grid, std::size_t k, CounterRng& rng, bool on_grid = true) {
    require(k <= grid.atoms, "random_scene: more targets than dictionary atoms");
    TargetScene scene;
    scene.on_grid = on_grid;
    scene.targets.reserve(k);
    std::vector<std::size_t> atoms;
    if (on_grid) {
        // Floyd's algorithm for a uniform k-subset, then sorted for stable output.
        std::vector<bool> taken(grid.atoms, false);
        const std::size_t n = grid.atoms;
        for (std::size_t j = n - k; j < n; ++j) {
            auto t = static_cast<std::size_t>(rng.below(j + 1));
            if (taken[t]) t = j;
            taken[t] = true;
            atoms.push_back(t);
        }
        std::sort(atoms.begin(), atoms.end());
    }
    for (std::size_t i = 0; i < k; ++i) {
        Target tg;
        tg.delay = on_grid ? grid.delay(atoms[i])
                           : rng.uniform(grid.tau0(), static_cast<double>(grid.atoms) * grid.tau0());
        tg.gain = rng.uniform_open_closed();
        tg.phase = kTwoPi * rng.uniform_open_closed();
        scene.targets.push_back(tg);
    }
    return scene;
}

// Complex amplitude of target k in the envelope: v_k exp(j (varphi_k - 2 pi f0 t_k)).
inline cplx target_amplitude(const Target& tg, double carrier) {
    return std::polar(tg.gain, tg.phase - kTwoPi * carrier * tg.delay);
}

enum class Synthesis { Direct, Bandlimited };

namespace detail {

inline double wrap_time(double t, double period) {
    double r = std::fmod(t, period);
    if (r < 0.0) r += period;
    return r;
}

// Fourier coefficients S_k (k in [-P/2, P/2), DFT order) of the periodic bandlimited
// reconstruction of the Nyquist samples s0[k] on a P-sample period.
inline CVector waveform_spectrum(const WaveformSpec& w, std::size_t p) {
    const CVector s0 = nyquist_samples(w);
    require(static_cast<std::size_t>(s0.size()) <= p, "waveform longer than the observation period");
    CVector padded = CVector::Zero(static_cast<Index>(p));
    padded.head(s0.size()) = s0;
    fft::forward(padded);
    return padded / static_cast<double>(p);
}

// Sum over targets of amp_k * s0_bl(t - t_k) on a circular grid of P*L samples.
inline CVector bandlimited_sum(const WaveformSpec& w, const NyquistGrid& grid, std::size_t n,
                               const std::vector<std::pair<double, cplx>>& delayed) {
    const std::size_t p = grid.samples;
    require(n % p == 0, "bandlimited synthesis needs a grid of P*L samples");
    const CVector spec = waveform_spectrum(w, p);
    CVector fine = CVector::Zero(static_cast<Index>(n));
    for (std::size_t k = 0; k < p; ++k) {
        const long f = fft::signed_bin(k, p);
        cplx acc{0.0, 0.0};
        for (const auto& [delay, amp] : delayed) {
            const double ph = -kTwoPi * static_cast<double>(f) * (delay / grid.period);
            acc += amp * std::polar(1.0, ph);
        }
        fine[static_cast<Index>(fft::bin_index(f, n))] = spec[static_cast<Index>(k)] * acc;
    }
    fft::backward(fine);
    return fine;
}

}  // namespace detail

// s~(t) = sum_k v_k exp(j varphi'_k) s0(t - t_k) on a circular grid of one period T.
inline CVector complex_envelope(const TargetScene& scene, const WaveformSpec& w, const NyquistGrid& grid,
                                double carrier, const TimeGrid& time, Synthesis mode = Synthesis::Direct) {
    w.validate();
    scene.validate(grid, w.pulse_width);
    require(std::abs(time.period() - grid.period) <= 1e-9 * grid.period,
            "complex_envelope: time grid must span exactly one observation interval");
    if (mode == Synthesis::Bandlimited) {
        std::vector<std::pair<double, cplx>> delayed;
        for (const auto& tg : scene.targets) delayed.emplace_back(tg.delay, target_amplitude(tg, carrier));
        return detail::bandlimited_sum(w, grid, time.size, delayed);
    }
    CVector out = CVector::Zero(static_cast<Index>(time.size));
    for (const auto& tg : scene.targets) {
        const cplx amp = target_amplitude(tg, carrier);
        for (std::size_t i = 0; i < time.size; ++i) {
            const double t = detail::wrap_time(time.time(i) - tg.delay, grid.period);
            out[static_cast<Index>(i)] += amp * baseband_sample(w, t);
        }
    }
    return out;
}

// r(t) = Re{ s~(t) exp(j 2 pi f0 t) }.
inline RVector if_signal(const TargetScene& scene, const WaveformSpec& w, const NyquistGrid& grid, double carrier,
                         const TimeGrid& time, Synthesis mode = Synthesis::Direct) {
    require(carrier > w.bandwidth / 2.0, "if_signal: carrier must exceed B/2");
    require(time.rate() > 2.0 * (carrier + w.bandwidth / 2.0),
            "if_signal: grid rate must exceed 2 (f0 + B/2)");
    const CVector env = complex_envelope(scene, w, grid, carrier, time, mode);
    RVector r(env.size());
    for (Index i = 0; i < env.size(); ++i) {
        const double t = time.time(static_cast<std::size_t>(i));
        // Reduce the carrier phase in cycles before scaling to radians.
        const double cyc = carrier * t - std::floor(carrier * t);
        r[i] = (env[i] * std::polar(1.0, kTwoPi * cyc)).real();
    }
    return r;
}

struct SparseCoefficients {
    CVector values;                  // v~, length N
    std::vector<std::size_t> support;  // sorted nonzero indices
};

// Coefficients on the unit-energy dictionary:
//   v~_n = sqrt(E) v_k exp(j (varphi_k - 2 pi f0 t_k)) at n = t_k / tau0 - 1 (0-based).
inline SparseCoefficients scene_to_coefficients(const TargetScene& scene, const NyquistGrid& grid, double carrier,
                                                const WaveformSpec& w) {
    if (!scene.on_grid) {
        throw ConfigError(
            "scene_to_coefficients: off-grid scene has no exact dictionary representation; "
            "synthesize its Nyquist samples (offgrid_nyquist_samples) and use the mismatch path");
    }
    scene.validate(grid, w.pulse_width);
    const double scale = std::sqrt(nyquist_energy(w));
    SparseCoefficients c;
    c.values = CVector::Zero(static_cast<Index>(grid.atoms));
    for (const auto& tg : scene.targets) {
        const long n = grid.atom_of_delay(tg.delay);
        require(n >= 0, "scene_to_coefficients: delay does not map to a dictionary atom");
        c.values[n] += scale * target_amplitude(tg, carrier);
    }
    for (Index i = 0; i < c.values.size(); ++i)
        if (c.values[i] != cplx{0.0, 0.0}) c.support.push_back(static_cast<std::size_t>(i));
    return c;
}

// Nyquist-rate dictionary synthesis Psi~ v~: P samples,
// x[l] = sum_n v~_n s0[(l - n - 1) mod P] / sqrt(E).
inline CVector synthesize_nyquist(const CVector& coeffs, const WaveformSpec& w, const NyquistGrid& grid) {
    require_dim(static_cast<std::size_t>(coeffs.size()) == grid.atoms, "synthesize_nyquist: coefficient length != N");
    const CVector s0 = nyquist_samples(w);
    const double inv = 1.0 / std::sqrt(s0.squaredNorm());
    const auto p = static_cast<Index>(grid.samples);
    CVector x = CVector::Zero(p);
    for (Index n = 0; n < coeffs.size(); ++n) {
        const cplx c = coeffs[n];
        if (c == cplx{0.0, 0.0}) continue;
        for (Index k = 0; k < s0.size(); ++k) x[(n + 1 + k) % p] += c * inv * s0[k];
    }
    return x;
}

// Dictionary synthesis on an arbitrary circular grid: sum_n v~_n s0(t - (n+1) tau0) / sqrt(E).
inline CVector synthesize(const CVector& coeffs, const WaveformSpec& w, const NyquistGrid& grid,
                          const TimeGrid& time, Synthesis mode = Synthesis::Direct) {
    require_dim(static_cast<std::size_t>(coeffs.size()) == grid.atoms, "synthesize: coefficient length != N");
    const double inv = 1.0 / std::sqrt(nyquist_energy(w));
    if (mode == Synthesis::Bandlimited) {
        std::vector<std::pair<double, cplx>> delayed;
        for (Index n = 0; n < coeffs.size(); ++n)
            if (coeffs[n] != cplx{0.0, 0.0}) delayed.emplace_back(grid.delay(static_cast<std::size_t>(n)), coeffs[n] * inv);
        return detail::bandlimited_sum(w, grid, time.size, delayed);
    }
    CVector out = CVector::Zero(static_cast<Index>(time.size));
    for (Index n = 0; n < coeffs.size(); ++n) {
        const cplx c = coeffs[n];
        if (c == cplx{0.0, 0.0}) continue;
        const double d = grid.delay(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < time.size; ++i) {
            const double t = detail::wrap_time(time.time(i) - d, grid.period);
            out[static_cast<Index>(i)] += (c * inv) * baseband_sample(w, t);
        }
    }
    return out;
}

// Nyquist samples of a scene's bandlimited envelope; valid for off-grid delays.
inline CVector offgrid_nyquist_samples(const TargetScene& scene, const WaveformSpec& w, const NyquistGrid& grid,
                                       double carrier) {
    return complex_envelope(scene, w, grid, carrier, TimeGrid::circular(grid.period, grid.samples),
                            Synthesis::Bandlimited);
}

}  // namespace quadcs
