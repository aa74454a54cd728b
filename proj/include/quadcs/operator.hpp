#pragma once

// Frequency-domain measurement operator M^ = R P^ Y^.
//
// Sizes: P Nyquist bins per period, N dictionary atoms, M measurements.
//   Y^ (P x N): y_ln = P^-1/2 psi_n(e^{j w_l}),  w_l = -pi + 2 pi l / P
//   P^ (P x P): p_ln = P^-1/2 c_p[(l - n) mod P]
//   R  (M x P): r_ml = M^-1/2 at l = (P - M)/2 + m
// All indices are 0-based; psi_n is atom n, the unit-energy waveform delayed by (n + 1) tau0.
//
// Fast apply works in time: P^ Y^ x is the DTFT of p[k] s[k] on the w_l grid, where
// s = Psi x is the Nyquist-rate synthesis, so
//   M^ x = M^-1/2 FFT((-1)^k p[k] s[k])[(P - M)/2 + m].

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "quadcs/chips.hpp"
#include "quadcs/fft.hpp"
#include "quadcs/waveforms.hpp"

namespace quadcs {

inline constexpr std::size_t kDenseGuard = 4096;

inline void check_dense_guard(std::size_t n, const char* what) {
    if (n > kDenseGuard)
        throw GuardError(std::string(what) + ": size " + std::to_string(n) + " exceeds dense guard " +
                         std::to_string(kDenseGuard));
}

// M = floor(B_cs T), decremented when P - M is odd.
inline std::size_t compressive_rows(double bcs, double period, std::size_t p) {
    require(bcs > 0.0 && period > 0.0, "compressive_rows: B_cs and T must be positive");
    auto m = static_cast<std::size_t>(std::floor(bcs * period + 1e-9));
    if (m > p) m = p;
    if ((p - m) % 2 != 0) --m;
    require(m >= 1, "compressive_rows: B_cs * T gives no measurements");
    return m;
}

// Waveform-matched dictionary in the frequency domain.
class FrequencyDictionary {
public:
    FrequencyDictionary(const WaveformSpec& w, const NyquistGrid& grid) : spec_(w), grid_(grid) {
        grid_.validate();
        CVector s0 = nyquist_samples(w);
        require(static_cast<std::size_t>(s0.size()) <= grid_.samples, "dictionary: pulse longer than the period");
        s0 /= std::sqrt(s0.squaredNorm());
        atom_ = CVector::Zero(static_cast<Index>(grid_.samples));
        atom_.head(s0.size()) = s0;
        atom_fft_ = fft::fft(atom_);
    }

    const WaveformSpec& spec() const { return spec_; }
    const NyquistGrid& grid() const { return grid_; }
    std::size_t atoms() const { return grid_.atoms; }
    std::size_t bins() const { return grid_.samples; }

    // Unit-energy s0 zero-padded to P samples.
    const CVector& atom() const { return atom_; }

    // s = Psi x: Nyquist samples (length P) of the dictionary synthesis.
    CVector synthesize(const CVector& x) const {
        require_dim(static_cast<std::size_t>(x.size()) == atoms(), "dictionary: coefficient length != N");
        CVector buf = place(x);
        fft::forward(buf);
        buf.array() *= atom_fft_.array();
        fft::backward(buf);
        return buf / static_cast<double>(bins());
    }

    // Psi^H s for a length-P Nyquist vector.
    CVector analyze(const CVector& s) const {
        require_dim(static_cast<std::size_t>(s.size()) == bins(), "dictionary: sample length != P");
        CVector buf = s;
        fft::forward(buf);
        buf.array() *= atom_fft_.array().conjugate();
        fft::backward(buf);
        buf /= static_cast<double>(bins());
        return take(buf);
    }

    // Y^ x (length P).
    CVector apply(const CVector& x) const { return shifted_dft(synthesize(x)) / std::sqrt(double(bins())); }

    // Y^H u.
    CVector adjoint(const CVector& u) const {
        require_dim(static_cast<std::size_t>(u.size()) == bins(), "dictionary: spectrum length != P");
        return analyze(shifted_dft_adjoint(u)) / std::sqrt(double(bins()));
    }

    // s0^(e^{j w_l}) for the unit-energy waveform, l = 0 .. P-1 (the diagonal of S^0).
    CVector spectrum() const { return shifted_dft(atom_); }

    // Explicit Y^ from direct DTFT sums (no FFT).
    CMatrix dense() const {
        check_dense_guard(bins(), "dictionary dense");
        const auto p = static_cast<Index>(bins());
        const auto n = static_cast<Index>(atoms());
        CMatrix y = CMatrix::Zero(p, n);
        const double scale = 1.0 / std::sqrt(double(p));
        for (Index col = 0; col < n; ++col) {
            for (Index l = 0; l < p; ++l) {
                const double w = -kPi + kTwoPi * double(l) / double(p);
                cplx acc{0.0, 0.0};
                for (Index k = 0; k < p; ++k) {
                    const cplx a = atom_[(k - col - 1 + 2 * p) % p];
                    if (a == cplx{0.0, 0.0}) continue;
                    acc += a * std::polar(1.0, -w * double(k));
                }
                y(l, col) = scale * acc;
            }
        }
        return y;
    }

    // DTFT on w_l = -pi + 2 pi l / P: FFT of (-1)^k z[k].
    static CVector shifted_dft(const CVector& z) {
        CVector buf = z;
        for (Index k = 1; k < buf.size(); k += 2) buf[k] = -buf[k];
        fft::forward(buf);
        return buf;
    }

    static CVector shifted_dft_adjoint(const CVector& u) {
        CVector buf = u;
        fft::backward(buf);
        for (Index k = 1; k < buf.size(); k += 2) buf[k] = -buf[k];
        return buf;
    }

private:
    CVector place(const CVector& x) const {
        const auto p = static_cast<Index>(bins());
        CVector buf = CVector::Zero(p);
        for (Index n = 0; n < x.size(); ++n) buf[(n + 1) % p] = x[n];
        return buf;
    }

    CVector take(const CVector& buf) const {
        const auto p = static_cast<Index>(bins());
        CVector x(static_cast<Index>(atoms()));
        for (Index n = 0; n < x.size(); ++n) x[n] = buf[(n + 1) % p];
        return x;
    }

    WaveformSpec spec_;
    NyquistGrid grid_;
    CVector atom_;
    CVector atom_fft_;
};

class MeasurementOperator {
public:
    MeasurementOperator(FrequencyDictionary dict, ChippingSequence chip, std::size_t m)
        : dict_(std::move(dict)), chip_(std::move(chip)), m_(m) {
        const std::size_t p = dict_.bins();
        require_dim(chip_.size() == p, "operator: chipping sequence length != samples per period");
        require(m_ >= 1 && m_ <= p, "operator: M must be in [1, P]");
        if ((p - m_) % 2 != 0)
            throw ConfigError("operator: P - M = " + std::to_string(p - m_) +
                              " is odd; the band selection needs an even difference");
        offset_ = (p - m_) / 2;
    }

    Index rows() const { return static_cast<Index>(m_); }
    Index cols() const { return static_cast<Index>(dict_.atoms()); }
    std::size_t bins() const { return dict_.bins(); }
    std::size_t band_offset() const { return offset_; }
    const FrequencyDictionary& dictionary() const { return dict_; }
    const ChippingSequence& chip() const { return chip_; }

    CVector apply(const CVector& x) const { return apply_nyquist(dict_.synthesize(x)); }

    CVector adjoint(const CVector& y) const { return dict_.analyze(adjoint_nyquist(y)); }

    // Measurements of an arbitrary bandlimited envelope given its P Nyquist samples.
    CVector apply_nyquist(const CVector& z) const {
        require_dim(static_cast<std::size_t>(z.size()) == bins(), "operator: Nyquist sample length != P");
        CVector buf = z.array() * chip_.values.cast<cplx>().array();
        buf = FrequencyDictionary::shifted_dft(buf);
        return buf.segment(static_cast<Index>(offset_), rows()) / std::sqrt(double(m_));
    }

    CVector adjoint_nyquist(const CVector& y) const {
        require_dim(y.size() == rows(), "operator: measurement length != M");
        CVector buf = CVector::Zero(static_cast<Index>(bins()));
        buf.segment(static_cast<Index>(offset_), rows()) = y / std::sqrt(double(m_));
        buf = FrequencyDictionary::shifted_dft_adjoint(buf);
        return buf.array() * chip_.values.cast<cplx>().array();
    }

    // R from its definition.
    CMatrix selection_matrix() const {
        CMatrix r = CMatrix::Zero(rows(), static_cast<Index>(bins()));
        for (Index m = 0; m < rows(); ++m) r(m, static_cast<Index>(offset_) + m) = 1.0 / std::sqrt(double(m_));
        return r;
    }

    // P^ from a direct DFS sum of the chipping sequence.
    CMatrix chip_matrix() const {
        check_dense_guard(bins(), "chip matrix");
        const auto p = static_cast<Index>(bins());
        CVector c(p);
        for (Index k = 0; k < p; ++k) {
            cplx acc{0.0, 0.0};
            for (Index l = 0; l < p; ++l) acc += chip_.values[l] * std::polar(1.0, -kTwoPi * double((k * l) % p) / double(p));
            c[k] = acc;
        }
        CMatrix out(p, p);
        const double scale = 1.0 / std::sqrt(double(p));
        for (Index l = 0; l < p; ++l)
            for (Index n = 0; n < p; ++n) out(l, n) = scale * c[((l - n) % p + p) % p];
        return out;
    }

    // R P^ Y^ built from the explicit factor matrices.
    CMatrix dense() const { return selection_matrix() * (chip_matrix() * dict_.dense()); }

    void describe(std::ostream& os) const {
        const auto& w = dict_.spec();
        os << "quadcs-operator v1\n"
           << "M " << m_ << "\nN " << dict_.atoms() << "\nP " << bins() << "\n"
           << "band_offset " << offset_ << "\n"
           << "chip_seed " << chip_.seed << "\n"
           << "waveform " << to_string(w.kind) << "\n"
           << "pulse_width " << w.pulse_width << "\nbandwidth " << w.bandwidth << "\n"
           << "zc_root " << w.zc_root << "\n"
           << "period " << dict_.grid().period << "\n";
    }

private:
    FrequencyDictionary dict_;
    ChippingSequence chip_;
    std::size_t m_;
    std::size_t offset_ = 0;
};

inline MeasurementOperator build_fd_operator(const WaveformSpec& w, const NyquistGrid& grid,
                                             const ChippingSequence& chip, std::size_t m) {
    return MeasurementOperator(FrequencyDictionary(w, grid), chip, m);
}

// G = Y^H Y^, dense.
inline CMatrix gram(const FrequencyDictionary& dict) {
    check_dense_guard(dict.atoms(), "gram");
    const auto n = static_cast<Index>(dict.atoms());
    CMatrix y(static_cast<Index>(dict.bins()), n);
    for (Index i = 0; i < n; ++i) y.col(i) = dict.apply(CVector::Unit(n, i));
    return y.adjoint() * y;
}

struct GramSummary {
    double max_off_diagonal = 0.0;
    double max_diagonal_deviation = 0.0;  // max |G_nn - 1|
    Index argmax_row = 0;
    Index argmax_col = 0;
};

inline GramSummary summarize_gram(const CMatrix& g) {
    GramSummary s;
    for (Index j = 0; j < g.cols(); ++j) {
        for (Index i = 0; i < g.rows(); ++i) {
            const double a = std::abs(g(i, j));
            if (i == j) {
                s.max_diagonal_deviation = std::max(s.max_diagonal_deviation, std::abs(g(i, j) - 1.0));
            } else if (a > s.max_off_diagonal) {
                s.max_off_diagonal = a;
                s.argmax_row = i;
                s.argmax_col = j;
            }
        }
    }
    return s;
}

// The Gram matrix is Toeplitz, G_nm = g(n - m) with g(d) = P^-1 sum_l |s0^(w_l)|^2 e^{j w_l d};
// this evaluates the summary from the lag sequence without forming G.
inline GramSummary gram_summary(const FrequencyDictionary& dict) {
    const CVector spec = dict.spectrum();
    const auto p = static_cast<Index>(dict.bins());
    const auto n = static_cast<Index>(dict.atoms());
    CVector power = spec.cwiseAbs2().cast<cplx>();
    // g(d) = P^-1 sum_l |S_l|^2 (-1)^d e^{j 2 pi l d / P}
    CVector lag = power;
    fft::backward(lag);
    GramSummary s;
    for (Index d = 0; d < n; ++d) {
        const double sign = (d % 2 == 0) ? 1.0 : -1.0;
        const cplx g = sign * lag[d % p] / double(p);
        if (d == 0) {
            s.max_diagonal_deviation = std::abs(g - 1.0);
        } else if (std::abs(g) > s.max_off_diagonal) {
            s.max_off_diagonal = std::abs(g);
            s.argmax_row = d;
            s.argmax_col = 0;
        }
    }
    return s;
}

}  // namespace quadcs
