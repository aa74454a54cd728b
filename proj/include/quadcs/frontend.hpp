#pragma once

// Analog front end on a circular oversampled grid: chipping, ideal band-pass filtering,
// minimum-rate band-pass sampling and digital quadrature demodulation, plus the
// baseband-equivalent fast path and band-limited noise.
//
// The fine grid holds n = P * L samples per period T. Filters are FFT masks on that grid.
// The compressive band is the M bins b in [-M/2, M/2) around the carrier (baseband: around
// DC), with gain P / M, and the compressive bandwidth is taken as M / T.
//
// The default chip waveform is the +-1 sequence with its spectrum equalized to be flat over
// (-B, B): Fourier coefficients c_p[a mod P] / P for |a| < P. With it, and with envelopes
// synthesized as Synthesis::Bandlimited, the shifted DFT of the compressive samples equals
// the frequency-domain operator output exactly. ChipShape::Rect gives the plain
// piecewise-constant waveform instead.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>

#include "quadcs/chips.hpp"
#include "quadcs/fft.hpp"
#include "quadcs/operator.hpp"
#include "quadcs/rng.hpp"
#include "quadcs/waveforms.hpp"

namespace quadcs {

// f_IF = (4 f_L + 2 B_cs) / (4 l + 1), 1 <= l <= floor(f_L / (2 B_cs)).
inline double bandpass_sampling_freq(double f_low, double bcs, long l) {
    require(f_low > 0.0 && bcs > 0.0, "bandpass_sampling_freq: f_L and B_cs must be positive");
    const auto lmax = static_cast<long>(std::floor(f_low / (2.0 * bcs) + 1e-9));
    require(l >= 1 && l <= lmax, "bandpass_sampling_freq: l = " + std::to_string(l) + " outside [1, " +
                                     std::to_string(lmax) + "]");
    return (4.0 * f_low + 2.0 * bcs) / (4.0 * static_cast<double>(l) + 1.0);
}

struct FrontendConfig {
    double carrier = 0.0;       // f0
    double bcs = 0.0;           // effective compressive bandwidth M / T
    double bcs_nominal = 0.0;   // requested B_cs
    std::size_t m = 0;          // measurements per period
    long l = 0;                 // band-pass sampling index
    std::size_t oversampling = 0;   // L
    std::size_t fine_samples = 0;   // P * L
    std::size_t nyquist_samples = 0;  // P
    double period = 0.0;
    double bandwidth = 0.0;     // B

    double sampling_rate() const { return 2.0 * bcs; }          // minimum-rate f_IF
    double sample_interval() const { return 1.0 / bcs; }        // T_cs
    double filter_gain() const { return double(nyquist_samples) / double(m); }
    double fine_rate() const { return double(fine_samples) / period; }
    TimeGrid fine_grid() const { return TimeGrid::circular(period, fine_samples); }
    long carrier_bin() const { return std::lround(carrier * period); }

    // Conditions for the IF path to be exact on the fine grid.
    void validate_if_path() const {
        require(m % 2 == 0, "frontend: IF path needs an even number of measurements");
        require(fine_samples % (2 * m) == 0, "frontend: fine grid is not an integer multiple of f_IF");
        const double f0t = carrier * period;
        require(std::abs(f0t - std::round(f0t)) < 1e-6, "frontend: carrier is not on a grid bin");
        const double p = double(nyquist_samples);
        const double half_m = double(m) / 2.0;
        require(std::abs(f0t - (2.0 * double(l) + 0.5) * double(m)) < 1e-6,
                "frontend: carrier violates f0 = (2l + 1/2) B_cs");
        require(2.0 * f0t > 1.5 * p + half_m, "frontend: carrier too low; chip images reach the filter band");
        require(double(fine_samples) > 2.0 * f0t + 1.5 * p + half_m,
                "frontend: fine grid too coarse for the chipped IF signal");
    }
};

// Minimum-rate front end. The carrier is tuned to the admissible value (2l + 1/2) M / T
// nearest carrier_hint; L is raised until the grid supports the IF path
// (n divisible by 2M, rate >= 2.5 (f0 + B/2), no chip-band aliasing).
inline FrontendConfig make_frontend(const NyquistGrid& grid, double bcs, double carrier_hint,
                                    std::size_t oversampling = 16, bool need_if_path = true) {
    grid.validate();
    require(bcs > 0.0 && bcs <= grid.bandwidth, "frontend: need 0 < B_cs <= B");
    require(carrier_hint > grid.bandwidth / 2.0, "frontend: carrier must exceed B/2");
    require(oversampling >= 2, "frontend: oversampling must be >= 2");
    require(grid.samples % 2 == 0, "frontend: samples per period must be even");
    FrontendConfig c;
    c.period = grid.period;
    c.bandwidth = grid.bandwidth;
    c.nyquist_samples = grid.samples;
    c.bcs_nominal = bcs;
    c.m = compressive_rows(bcs, grid.period, grid.samples);
    c.bcs = double(c.m) / grid.period;
    const long l = std::max(1L, std::lround((carrier_hint / c.bcs - 0.5) / 2.0));
    c.l = l;
    c.carrier = (2.0 * double(l) + 0.5) * c.bcs;
    const double p = double(grid.samples);
    const double f0t = c.carrier * grid.period;
    std::size_t lf = oversampling;
    if (need_if_path) {
        for (;; ++lf) {
            const std::size_t n = grid.samples * lf;
            const bool divisible = (c.m % 2 == 0) && n % (2 * c.m) == 0;
            const bool fast = double(n) / grid.period >= 2.5 * (c.carrier + grid.bandwidth / 2.0);
            const bool clean = double(n) > 2.0 * f0t + 1.5 * p + double(c.m) / 2.0;
            if (divisible && fast && clean) break;
            require(lf < 100000, "frontend: no admissible oversampling factor");
        }
    }
    c.oversampling = lf;
    c.fine_samples = grid.samples * lf;
    if (need_if_path) c.validate_if_path();
    return c;
}

enum class ChipShape { Flat, Rect };

// p(t) on the fine grid (n a multiple of P, n >= 2P for the flat shape).
inline RVector chip_waveform(const ChippingSequence& chip, std::size_t n, ChipShape shape = ChipShape::Flat) {
    const std::size_t p = chip.size();
    require(n % p == 0, "chip_waveform: fine grid must be a multiple of the chip count");
    RVector out(static_cast<Index>(n));
    if (shape == ChipShape::Rect) {
        const std::size_t l = n / p;
        for (std::size_t i = 0; i < n; ++i) out[static_cast<Index>(i)] = chip.values[static_cast<Index>(i / l)];
        return out;
    }
    require(n >= 2 * p, "chip_waveform: flat chips need at least 2P fine samples");
    const CVector c = dfs_spectrum(chip);
    CVector spec = CVector::Zero(static_cast<Index>(n));
    const long pl = static_cast<long>(p);
    for (long a = -pl + 1; a < pl; ++a)
        spec[static_cast<Index>(fft::bin_index(a, n))] = c[static_cast<Index>(fft::bin_index(a, p))] / double(p);
    fft::backward(spec);
    return spec.real();
}

struct Measurements {
    CVector s_cs;   // I + jQ
    RVector i_cs;
    RVector q_cs;
    CVector noise;  // noise component of s_cs; empty when no noise was injected
    std::uint64_t seed = 0;
    std::string config_hash;
};

inline Measurements make_measurements(CVector s) {
    Measurements out;
    out.i_cs = s.real();
    out.q_cs = s.imag();
    out.s_cs = std::move(s);
    return out;
}

// Baseband-equivalent chain: low-pass (|f| in the M-bin band, gain P/M) of p(t) s(t),
// sampled at T_cs = T / M. `envelope` lies on a circular grid of n = P * L samples.
inline CVector baseband_compressive(const CVector& envelope, const RVector& chipwave, const FrontendConfig& cfg) {
    const auto n = static_cast<std::size_t>(envelope.size());
    require_dim(chipwave.size() == envelope.size(), "baseband_measure: chip waveform and envelope sizes differ");
    require_dim(n % cfg.nyquist_samples == 0, "baseband_measure: envelope grid is not a multiple of P");
    CVector buf = envelope.array() * chipwave.cast<cplx>().array();
    fft::forward(buf);
    const std::size_t m = cfg.m;
    const long half = static_cast<long>(m / 2);
    CVector out = CVector::Zero(static_cast<Index>(m));
    const double gain = cfg.filter_gain() / double(n);
    for (long b = -half; b < half; ++b)
        out[static_cast<Index>(fft::bin_index(b, m))] = gain * buf[static_cast<Index>(fft::bin_index(b, n))];
    fft::backward(out);
    return out;
}

inline Measurements baseband_measure(const CVector& envelope, const ChippingSequence& chip, const FrontendConfig& cfg,
                                     ChipShape shape = ChipShape::Flat) {
    const RVector cw = chip_waveform(chip, static_cast<std::size_t>(envelope.size()), shape);
    Measurements out = make_measurements(baseband_compressive(envelope, cw, cfg));
    out.seed = chip.seed;
    return out;
}

// y[k] = y(k / f_IF), y = h_bp * (p r), k = 0 .. 2M-1 over one period.
inline RVector mix_filter_sample(const RVector& r, const ChippingSequence& chip, const FrontendConfig& cfg,
                                 ChipShape shape = ChipShape::Flat) {
    cfg.validate_if_path();
    const auto n = static_cast<std::size_t>(r.size());
    require_dim(n == cfg.fine_samples, "mix_filter_sample: signal is not on the configured fine grid");
    const RVector cw = chip_waveform(chip, n, shape);
    CVector buf = (r.array() * cw.array()).cast<cplx>();
    fft::forward(buf);
    const std::size_t k_count = 2 * cfg.m;
    const long half = static_cast<long>(cfg.m / 2);
    const long f0 = cfg.carrier_bin();
    // Fold the selected bins straight onto the 2M-point output grid (exact decimation).
    CVector folded = CVector::Zero(static_cast<Index>(k_count));
    const double gain = cfg.filter_gain() / double(n);
    for (long b = -half; b < half; ++b) {
        for (long f : {f0 + b, -(f0 + b)}) {
            folded[static_cast<Index>(fft::bin_index(f, k_count))] += gain * buf[static_cast<Index>(fft::bin_index(f, n))];
        }
    }
    fft::backward(folded);
    return folded.real();
}

enum class HalfbandFilter { Ideal, Fir63 };

// 63-tap Hamming-windowed halfband low-pass, cutoff f_s / 4, unit DC gain.
inline RVector halfband_fir63() {
    constexpr int taps = 63;
    constexpr int mid = taps / 2;
    RVector h(taps);
    for (int i = 0; i < taps; ++i) {
        const int k = i - mid;
        const double ideal = (k == 0) ? 0.5 : std::sin(kPi * k / 2.0) / (kPi * k);
        const double win = 0.54 - 0.46 * std::cos(kTwoPi * i / (taps - 1));
        h[i] = ideal * win;
    }
    return h / h.sum();
}

struct IqPair {
    RVector i;
    RVector q;
};

// I[m] = (-1)^m y[2m]; Q[m] = (h_lp * (-2 sin(k pi / 2) y[k]))[2m].
// y is one period of a circular sequence; an odd trailing sample is dropped.
inline IqPair quadrature_demodulate(const RVector& y_in, HalfbandFilter filter = HalfbandFilter::Ideal) {
    const Index len = y_in.size() - (y_in.size() % 2);
    require_dim(len >= 2, "quadrature_demodulate: need at least two samples");
    const RVector y = y_in.head(len);
    const Index m = len / 2;
    IqPair out;
    out.i.resize(m);
    for (Index k = 0; k < m; ++k) out.i[k] = ((k % 2 == 0) ? 1.0 : -1.0) * y[2 * k];
    RVector q(len);
    for (Index k = 0; k < len; ++k) {
        const long r = k % 4;
        const double s = (r == 1) ? 1.0 : (r == 3 ? -1.0 : 0.0);  // sin(k pi / 2)
        q[k] = -2.0 * s * y[k];
    }
    RVector lp(len);
    if (filter == HalfbandFilter::Ideal) {
        CVector buf = q.cast<cplx>();
        fft::forward(buf);
        for (Index k = 0; k < len; ++k) {
            const long f = std::abs(fft::signed_bin(static_cast<std::size_t>(k), static_cast<std::size_t>(len)));
            const double g = (2 * f < m) ? 1.0 : (2 * f == m ? 0.5 : 0.0);
            buf[k] *= g / double(len);
        }
        fft::backward(buf);
        lp = buf.real();
    } else {
        const RVector h = halfband_fir63();
        const Index mid = h.size() / 2;
        for (Index k = 0; k < len; ++k) {
            double acc = 0.0;
            for (Index j = 0; j < h.size(); ++j) acc += h[j] * q[((k - j + mid) % len + len) % len];
            lp[k] = acc;
        }
    }
    out.q.resize(m);
    for (Index k = 0; k < m; ++k) out.q[k] = lp[2 * k];
    return out;
}

// IF chain: mix, filter, sample, demodulate.
inline Measurements if_measure(const RVector& r, const ChippingSequence& chip, const FrontendConfig& cfg,
                               HalfbandFilter filter = HalfbandFilter::Ideal, ChipShape shape = ChipShape::Flat) {
    const RVector y = mix_filter_sample(r, chip, cfg, shape);
    IqPair iq = quadrature_demodulate(y, filter);
    Measurements out;
    out.s_cs.resize(iq.i.size());
    for (Index k = 0; k < iq.i.size(); ++k) out.s_cs[k] = cplx(iq.i[k], iq.q[k]);
    out.i_cs = std::move(iq.i);
    out.q_cs = std::move(iq.q);
    out.seed = chip.seed;
    return out;
}

// At the minimum rate the band edge b = -M/2 and its mirror both land on f_s/4, so the
// Q path cannot recover the imaginary part of that bin. Given baseband-path samples, this
// returns what the IF path delivers: s[m] - j Im(A) (-1)^m / M with A the M-point DFT at bin M/2.
inline CVector minimum_rate_edge_loss(const CVector& s_cs) {
    const Index m = s_cs.size();
    cplx a{0.0, 0.0};
    for (Index k = 0; k < m; ++k) a += s_cs[k] * ((k % 2 == 0) ? 1.0 : -1.0);
    CVector out = s_cs;
    for (Index k = 0; k < m; ++k) out[k] -= kJ * a.imag() * ((k % 2 == 0) ? 1.0 : -1.0) / double(m);
    return out;
}

// Shifted DFT at w_m = -pi + 2 pi m / M, scaled by M^-1/2: the frequency-domain measurements.
inline CVector frequency_measurements(const CVector& s_cs) {
    return FrequencyDictionary::shifted_dft(s_cs) / std::sqrt(double(s_cs.size()));
}

// Noise level from the input SNR, with the signal power taken over the whole period:
// ISNR = (mean |r|^2) / (N0 B) and mean |r|^2 = mean |s~|^2 / 2.
inline double noise_density_for_isnr(double mean_envelope_power, double bandwidth, double isnr_db) {
    require(bandwidth > 0.0, "noise: bandwidth must be positive");
    return 0.5 * mean_envelope_power / (bandwidth * from_db10(isnr_db));
}

inline double isnr_db_of(double mean_envelope_power, double n0, double bandwidth) {
    return db10(0.5 * mean_envelope_power / (n0 * bandwidth));
}

struct NoisySignal {
    CVector noisy;
    CVector clean;
    CVector noise;
    double n0 = 0.0;
};

// Complex envelope of band-limited white noise: flat over the P Nyquist bins, E|n|^2 = 2 N0 B
// per sample, on a circular grid of signal.size() samples (a multiple of P).
inline CVector bandlimited_noise(std::size_t n, std::size_t p, double n0, double bandwidth, CounterRng& rng) {
    require(n0 >= 0.0, "noise: N0 must be non-negative");
    require(bandwidth > 0.0, "noise: bandwidth must be positive");
    require(n % p == 0, "noise: grid must be a multiple of the Nyquist sample count");
    if (n0 == 0.0) return CVector::Zero(static_cast<Index>(n));
    const double per_sample = 2.0 * n0 * bandwidth;
    if (n == p) {
        CVector z(static_cast<Index>(n));
        for (Index i = 0; i < z.size(); ++i) z[i] = rng.complex_normal(per_sample);
        return z;
    }
    CVector spec = CVector::Zero(static_cast<Index>(n));
    for (std::size_t k = 0; k < p; ++k) {
        const long f = fft::signed_bin(k, p);
        spec[static_cast<Index>(fft::bin_index(f, n))] = rng.complex_normal(per_sample / double(p));
    }
    fft::backward(spec);
    return spec;
}

inline NoisySignal add_bandlimited_noise(const CVector& signal, const NyquistGrid& grid, double n0, std::uint64_t seed) {
    require(n0 >= 0.0, "noise: N0 must be non-negative");
    CounterRng rng(derive_key(seed, {0x6E6F697365ULL}));
    NoisySignal out;
    out.clean = signal;
    out.n0 = n0;
    out.noise = bandlimited_noise(static_cast<std::size_t>(signal.size()), grid.samples, n0, grid.bandwidth, rng);
    out.noisy = out.clean + out.noise;
    return out;
}

inline void write_waveform_csv(std::ostream& os, const TimeGrid& grid, const CVector& x) {
    os << "time,re,im\n";
    os.precision(12);
    for (Index i = 0; i < x.size(); ++i)
        os << std::scientific << grid.time(static_cast<std::size_t>(i)) << ',' << x[i].real() << ',' << x[i].imag()
           << '\n';
}

inline void write_waveform_csv(std::ostream& os, const TimeGrid& grid, const RVector& x) {
    os << "time,value\n";
    os.precision(12);
    for (Index i = 0; i < x.size(); ++i)
        os << std::scientific << grid.time(static_cast<std::size_t>(i)) << ',' << x[i] << '\n';
}

// Dense time-domain operator: column n is the baseband chain applied to atom n on the
// fine grid of cfg (Synthesis::Bandlimited atoms).
struct TimeDomainOperator {
    CMatrix matrix;
};

inline TimeDomainOperator td_operator(const WaveformSpec& w, const NyquistGrid& grid, const ChippingSequence& chip,
                                      const FrontendConfig& cfg) {
    check_dense_guard(grid.atoms, "td_operator");
    const TimeGrid fine = TimeGrid::circular(grid.period, cfg.nyquist_samples * cfg.oversampling);
    const RVector cw = chip_waveform(chip, fine.size);
    TimeDomainOperator op;
    op.matrix.resize(static_cast<Index>(cfg.m), static_cast<Index>(grid.atoms));
    const double inv = 1.0 / std::sqrt(nyquist_energy(w));
    for (std::size_t n = 0; n < grid.atoms; ++n) {
        const CVector atom = detail::bandlimited_sum(w, grid, fine.size, {{grid.delay(n), cplx(inv, 0.0)}});
        op.matrix.col(static_cast<Index>(n)) = baseband_compressive(atom, cw, cfg);
    }
    return op;
}

}  // namespace quadcs
