#pragma once

// Uniform interface over the two coefficient fields: ExactScalar (symbolic
// frequencies) and std::complex<double> (numeric frequencies).

#include <algorithm>
#include <complex>
#include <span>

#include "bnf/errors.hpp"
#include "bnf/exact_scalar.hpp"
#include "bnf/frequencies.hpp"

namespace bnf {

using Complex = std::complex<double>;

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<ExactScalar> {
    using Accumulator = ExactAccumulator;
    static constexpr bool exact = true;

    static ExactScalar from_rational(const mpq_class& q) { return ExactScalar(q); }
    static ExactScalar from_gaussian(const GaussianRational& c) { return ExactScalar(c); }
    static bool is_zero(const ExactScalar& s) { return s.is_zero(); }
    static ExactScalar conj(const ExactScalar& s) { return s.conj(); }
    static bool is_real(const ExactScalar& s) { return s.is_real(); }

    static void require_mode(const Frequencies& w) {
        if (!w.is_symbolic()) throw ValidationError("exact mode requires symbolic frequencies");
    }
    /// <m, omega>.
    static ExactScalar linear_form(std::span<const int> m, const Frequencies& w) {
        require_mode(w);
        return ExactScalar::linear_form(m);
    }
    static ExactScalar div_linear_form(const ExactScalar& c, std::span<const int> m, const Frequencies& w) {
        require_mode(w);
        return c.div_linear_form(m);
    }
    static Complex to_complex(const ExactScalar& s, std::span<const double> omega) { return s.evaluate(omega); }
    static void scale(ExactScalar& s, const GaussianRational& g) { s *= g; }
    static bool approx_equal(const ExactScalar& a, const ExactScalar& b) { return a == b; }
};

class ComplexAccumulator {
public:
    void add(const Complex& c) { sum_ += c; }
    void add_scaled(const Complex& c, const GaussianRational& f) { sum_ += c * f.to_complex(); }
    void add_product(const Complex& a, const Complex& b, const GaussianRational& f) { sum_ += a * b * f.to_complex(); }
    Complex result() const { return sum_; }

private:
    Complex sum_{0.0, 0.0};
};

template <>
struct ScalarTraits<Complex> {
    using Accumulator = ComplexAccumulator;
    static constexpr bool exact = false;

    static Complex from_rational(const mpq_class& q) { return {q.get_d(), 0.0}; }
    static Complex from_gaussian(const GaussianRational& c) { return c.to_complex(); }
    static bool is_zero(const Complex& s) { return s == Complex(0.0, 0.0); }
    static Complex conj(const Complex& s) { return std::conj(s); }
    static bool is_real(const Complex& s) { return s.imag() == 0.0; }

    static void require_mode(const Frequencies& w) {
        if (w.is_symbolic()) throw ValidationError("float mode requires numeric frequencies");
    }
    static Complex linear_form(std::span<const int> m, const Frequencies& w) {
        require_mode(w);
        return {w.pairing(m), 0.0};
    }
    static Complex div_linear_form(const Complex& c, std::span<const int> m, const Frequencies& w) {
        require_mode(w);
        return c / w.checked_divisor(m);
    }
    static Complex to_complex(const Complex& s, std::span<const double>) { return s; }
    static void scale(Complex& s, const GaussianRational& g) { s *= g.to_complex(); }
    /// Relative comparison used where exact mode compares structurally.
    static bool approx_equal(const Complex& a, const Complex& b) {
        return std::abs(a - b) <= kTolerance * std::max({1.0, std::abs(a), std::abs(b)});
    }
    static constexpr double kTolerance = 1e-9;
};

/// c / <m, omega>, with the resonance guard in numeric mode.
template <class S>
S scalar_div_linear_form(const S& c, std::span<const int> m, const Frequencies& w) {
    return ScalarTraits<S>::div_linear_form(c, m, w);
}

}  // namespace bnf
