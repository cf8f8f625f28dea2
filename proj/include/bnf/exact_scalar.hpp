#pragma once

// Exact coefficient field: rational functions in symbolic frequencies
// omega_1..omega_n whose denominators are products of integer linear forms
// <m, omega>, with Gaussian-rational coefficients.

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

namespace bnf {

/// Largest ambient dimension n supported by the packed exponent keys.
inline constexpr int kMaxDim = 6;

struct GaussianRational {
    mpq_class re;
    mpq_class im;

    GaussianRational() = default;
    GaussianRational(mpq_class r) : re(std::move(r)) {}  // NOLINT(google-explicit-constructor)
    GaussianRational(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {}
    GaussianRational(long r) : re(r) {}  // NOLINT(google-explicit-constructor)

    static GaussianRational i() { return {mpq_class(0), mpq_class(1)}; }

    bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
    bool is_real() const { return sgn(im) == 0; }
    GaussianRational conj() const { return {re, -im}; }

    GaussianRational& operator+=(const GaussianRational& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    GaussianRational& operator-=(const GaussianRational& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    GaussianRational& operator*=(const GaussianRational& o);
    GaussianRational& operator/=(const mpq_class& q) {
        re /= q;
        im /= q;
        return *this;
    }

    friend GaussianRational operator+(GaussianRational a, const GaussianRational& b) { return a += b; }
    friend GaussianRational operator-(GaussianRational a, const GaussianRational& b) { return a -= b; }
    friend GaussianRational operator*(GaussianRational a, const GaussianRational& b) { return a *= b; }
    friend GaussianRational operator-(const GaussianRational& a) { return {-a.re, -a.im}; }
    friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
        return a.re == b.re && a.im == b.im;
    }

    std::complex<double> to_complex() const { return {re.get_d(), im.get_d()}; }
};

struct GaussianInteger {
    mpz_class re;
    mpz_class im;

    bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
    friend bool operator==(const GaussianInteger&, const GaussianInteger&) = default;
};

using OmegaExponent = std::array<std::uint8_t, kMaxDim>;

/// Sparse polynomial in the frequency indeterminates with Gaussian-integer
/// coefficients, terms sorted by exponent.
class OmegaPoly {
public:
    using Term = std::pair<OmegaExponent, GaussianInteger>;
    using Terms = std::vector<Term>;

    OmegaPoly() = default;
    static OmegaPoly constant(GaussianInteger c);
    static OmegaPoly monomial(const OmegaExponent& e, GaussianInteger c);
    /// <m, omega> as a polynomial.
    static OmegaPoly linear(std::span<const int> m);

    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    int total_degree() const;

    OmegaPoly& operator+=(const OmegaPoly& o);
    OmegaPoly& operator-=(const OmegaPoly& o);
    void mul_integer(const mpz_class& k);
    void mul_gaussian(const GaussianInteger& c);
    void mul_i();
    void negate();
    void divexact(const mpz_class& k);
    friend OmegaPoly operator*(const OmegaPoly& a, const OmegaPoly& b);
    OmegaPoly mul_linear(std::span<const int> m) const;
    friend bool operator==(const OmegaPoly& a, const OmegaPoly& b) { return a.terms_ == b.terms_; }

    /// Nonnegative gcd of all real and imaginary parts.
    mpz_class content() const;
    OmegaPoly conj() const;
    std::complex<double> evaluate(std::span<const double> omega, const mpq_class& scale) const;

    /// Exact quotient by the primitive linear form <m, omega>, or nullopt
    /// when it does not divide.
    std::optional<OmegaPoly> divide_linear(std::span<const int> m) const;

private:
    void normalize();  // sort and merge
    Terms terms_;
};

/// Primitive integer vector with positive leading nonzero entry.
class LinearForm {
public:
    LinearForm() = default;

    /// Splits m = scale * form with form canonical.  m must be nonzero.
    static std::pair<LinearForm, int> canonical(std::span<const int> m);

    std::span<const int> coeffs() const { return {m_.data(), static_cast<std::size_t>(kMaxDim)}; }
    int operator[](int i) const { return m_[static_cast<std::size_t>(i)]; }
    double evaluate(std::span<const double> omega) const;

    friend auto operator<=>(const LinearForm&, const LinearForm&) = default;

private:
    std::array<int, kMaxDim> m_{};
};

using FormMultiset = std::vector<LinearForm>;  // kept sorted

/// q * N / prod(den) with N primitive, its first coefficient in the right
/// half plane (real part > 0, or real part 0 and imaginary part > 0), and no
/// form of `den` dividing N.  This normal form is unique.
struct ExactFraction {
    mpq_class scale;
    OmegaPoly num;
    FormMultiset den;

    bool is_zero() const { return num.is_zero(); }
    friend bool operator==(const ExactFraction&, const ExactFraction&) = default;

    /// Brings arbitrary (scale, num, den) to the normal form above.
    static ExactFraction make(mpq_class scale, OmegaPoly num, FormMultiset den);
    std::string to_string() const;
};

/// Value of a scalar at a fixed pseudo-random frequency point, computed in
/// F_p[i] with p = 2^61 - 1.  Evaluation is a ring homomorphism, so a nonzero
/// shadow proves a value nonzero; a zero shadow is confirmed exactly.
struct Shadow {
    std::uint64_t re = 0;
    std::uint64_t im = 0;
    bool valid = true;

    bool is_zero() const { return valid && re == 0 && im == 0; }
    Shadow& operator+=(const Shadow& o);
    Shadow& operator*=(const Shadow& o);
    friend Shadow operator*(Shadow a, const Shadow& b) { return a *= b; }
    Shadow conj() const;
    static Shadow of(const GaussianRational& c);
    static Shadow of(const ExactFraction& f);
    static Shadow of_form(std::span<const int> m);
    Shadow inverse() const;
};

/// Element of the exact coefficient field, held as a sum of reduced
/// fractions with pairwise distinct denominators.  The sum is not unique, so
/// equality and zero tests go through the shadow and, when that vanishes,
/// through the single-fraction normal form.  Values that are zero are always
/// stored with no parts.
class ExactScalar {
public:
    ExactScalar() = default;
    ExactScalar(const mpq_class& q);            // NOLINT(google-explicit-constructor)
    ExactScalar(const GaussianRational& c);     // NOLINT(google-explicit-constructor)
    ExactScalar(long v) : ExactScalar(mpq_class(v)) {}  // NOLINT(google-explicit-constructor)

    static ExactScalar from_fraction(ExactFraction f);
    static ExactScalar linear_form(std::span<const int> m);
    static ExactScalar i() { return ExactScalar(GaussianRational::i()); }

    const std::vector<ExactFraction>& parts() const { return parts_; }
    /// The value as one fraction over the least common denominator.
    ExactFraction canonical() const;

    bool is_zero() const { return parts_.empty(); }
    bool is_real() const;
    /// The value as an omega-free rational, if it is one.
    std::optional<mpq_class> as_rational() const;

    ExactScalar conj() const;
    ExactScalar div_linear_form(std::span<const int> m) const;
    ExactScalar mul_linear_form(std::span<const int> m) const;
    std::complex<double> evaluate(std::span<const double> omega) const;

    ExactScalar& operator+=(const ExactScalar& o);
    ExactScalar& operator-=(const ExactScalar& o);
    ExactScalar& operator*=(const ExactScalar& o);
    ExactScalar& operator*=(const GaussianRational& c);

    friend ExactScalar operator+(ExactScalar a, const ExactScalar& b) { return a += b; }
    friend ExactScalar operator-(ExactScalar a, const ExactScalar& b) { return a -= b; }
    friend ExactScalar operator*(ExactScalar a, const ExactScalar& b) { return a *= b; }
    friend ExactScalar operator-(ExactScalar a) { return a *= GaussianRational(-1); }
    friend bool operator==(const ExactScalar& a, const ExactScalar& b) {
        if (a.shadow_.valid && b.shadow_.valid && (a.shadow_.re != b.shadow_.re || a.shadow_.im != b.shadow_.im)) {
            return false;
        }
        return a.parts_ == b.parts_ || (a - b).is_zero();
    }

    std::string to_string() const { return canonical().to_string(); }

private:
    friend class ExactAccumulator;
    void insert(ExactFraction f);
    void settle();  // confirms a vanishing shadow exactly

    std::vector<ExactFraction> parts_;  // sorted by denominator
    Shadow shadow_;
};

/// Sums many exact scalars, grouping by unreduced denominator so that each
/// group is normalized once per result.
class ExactAccumulator {
public:
    void add(const ExactScalar& c);
    void add_scaled(const ExactScalar& c, const GaussianRational& factor);
    void add_product(const ExactScalar& a, const ExactScalar& b, const GaussianRational& factor);
    ExactScalar result() const;

private:
    struct Group {
        OmegaPoly poly;  // value is poly / den
        mpz_class den{1};
    };
    void add_to_group(FormMultiset forms, OmegaPoly poly, const mpq_class& q, const GaussianRational& factor);

    std::map<FormMultiset, Group> groups_;
    Shadow shadow_;
};

FormMultiset merge_forms(const FormMultiset& a, const FormMultiset& b);

}  // namespace bnf
