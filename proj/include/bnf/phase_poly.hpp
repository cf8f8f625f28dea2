#pragma once

// Sparse phase-space polynomials in complex coordinates z_j = x_j + i xi_j,
// the Poisson bracket in those coordinates, and the action-variable
// polynomials that make up a normal form.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "bnf/errors.hpp"
#include "bnf/exact_scalar.hpp"
#include "bnf/frequencies.hpp"
#include "bnf/scalar_traits.hpp"

namespace bnf {

/// Non-negative integer exponent vector of length n (n <= kMaxDim).
struct MultiIndex {
    std::array<std::uint8_t, kMaxDim> k{};

    static MultiIndex from(std::span<const int> v) {
        if (v.size() > static_cast<std::size_t>(kMaxDim)) throw ValidationError("multi-index too long");
        MultiIndex m;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] < 0 || v[i] > 255) throw ValidationError("multi-index entry out of range");
            m.k[i] = static_cast<std::uint8_t>(v[i]);
        }
        return m;
    }
    static MultiIndex unit(int i) {
        MultiIndex m;
        m.k[static_cast<std::size_t>(i)] = 1;
        return m;
    }

    int operator[](int i) const { return k[static_cast<std::size_t>(i)]; }
    int degree() const {
        int d = 0;
        for (auto v : k) d += v;
        return d;
    }
    std::vector<int> to_vector(int n) const { return {k.begin(), k.begin() + n}; }

    friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
};

/// Exponent pair (alpha, beta) of z^alpha zbar^beta.  RealPoly reuses the
/// same key for x^alpha xi^beta.
struct PhaseMonomial {
    std::array<std::uint8_t, 2 * kMaxDim> e{};

    static PhaseMonomial from(std::span<const int> alpha, std::span<const int> beta) {
        PhaseMonomial m;
        const auto a = MultiIndex::from(alpha);
        const auto b = MultiIndex::from(beta);
        for (int i = 0; i < kMaxDim; ++i) {
            m.e[static_cast<std::size_t>(i)] = a.k[static_cast<std::size_t>(i)];
            m.e[static_cast<std::size_t>(kMaxDim + i)] = b.k[static_cast<std::size_t>(i)];
        }
        return m;
    }
    static PhaseMonomial diagonal(const MultiIndex& m) {
        PhaseMonomial p;
        for (int i = 0; i < kMaxDim; ++i) {
            p.e[static_cast<std::size_t>(i)] = m.k[static_cast<std::size_t>(i)];
            p.e[static_cast<std::size_t>(kMaxDim + i)] = m.k[static_cast<std::size_t>(i)];
        }
        return p;
    }

    int alpha(int i) const { return e[static_cast<std::size_t>(i)]; }
    int beta(int i) const { return e[static_cast<std::size_t>(kMaxDim + i)]; }
    void set_alpha(int i, int v) { e[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v); }
    void set_beta(int i, int v) { e[static_cast<std::size_t>(kMaxDim + i)] = static_cast<std::uint8_t>(v); }

    int degree() const {
        int d = 0;
        for (auto v : e) d += v;
        return d;
    }
    bool is_diagonal() const {
        for (int i = 0; i < kMaxDim; ++i) {
            if (alpha(i) != beta(i)) return false;
        }
        return true;
    }
    bool is_even() const {
        for (int i = 0; i < kMaxDim; ++i) {
            if ((alpha(i) + beta(i)) % 2 != 0) return false;
        }
        return true;
    }
    /// alpha - beta, the index of the small divisor <omega, alpha - beta>.
    std::array<int, kMaxDim> difference() const {
        std::array<int, kMaxDim> m{};
        for (int i = 0; i < kMaxDim; ++i) m[static_cast<std::size_t>(i)] = alpha(i) - beta(i);
        return m;
    }
    PhaseMonomial swapped() const {
        PhaseMonomial s;
        for (int i = 0; i < kMaxDim; ++i) {
            s.set_alpha(i, beta(i));
            s.set_beta(i, alpha(i));
        }
        return s;
    }
    MultiIndex alpha_index() const {
        MultiIndex m;
        std::copy_n(e.begin(), kMaxDim, m.k.begin());
        return m;
    }
    MultiIndex beta_index() const {
        MultiIndex m;
        std::copy_n(e.begin() + kMaxDim, kMaxDim, m.k.begin());
        return m;
    }

    friend auto operator<=>(const PhaseMonomial&, const PhaseMonomial&) = default;
};

namespace detail {

inline void check_dim(int n) {
    if (n < 1 || n > kMaxDim) throw ValidationError("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
}

/// Sparse association Key -> S with zero coefficients never stored.
template <class Key, class S>
class SparseTerms {
public:
    using Terms = std::map<Key, S>;
    using Traits = ScalarTraits<S>;

    explicit SparseTerms(int n) : n_(n) { check_dim(n); }

    int dim() const { return n_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    void add_term(const Key& key, const S& c) {
        if (Traits::is_zero(c)) return;
        auto [it, inserted] = terms_.try_emplace(key, c);
        if (!inserted) {
            it->second += c;
            if (Traits::is_zero(it->second)) terms_.erase(it);
        }
    }
    void set_term(const Key& key, const S& c) {
        if (Traits::is_zero(c)) {
            terms_.erase(key);
        } else {
            terms_[key] = c;
        }
    }
    S coeff(const Key& key) const {
        auto it = terms_.find(key);
        return it == terms_.end() ? S{} : it->second;
    }
    /// Multiplies every coefficient by a Gaussian rational constant.
    void scale(const GaussianRational& g) {
        if (g.is_zero()) {
            terms_.clear();
            return;
        }
        for (auto& [k, c] : terms_) Traits::scale(c, g);
    }

protected:
    void require_same_dim(const SparseTerms& o) const {
        if (o.n_ != n_) throw ValidationError("dimension mismatch");
    }
    void add_all(const SparseTerms& o, bool negate) {
        require_same_dim(o);
        for (const auto& [k, c] : o.terms_) add_term(k, negate ? S(-c) : c);
    }
    void scale_all(const S& c) {
        if (Traits::is_zero(c)) {
            terms_.clear();
            return;
        }
        for (auto it = terms_.begin(); it != terms_.end();) {
            it->second *= c;
            it = Traits::is_zero(it->second) ? terms_.erase(it) : std::next(it);
        }
    }

    int n_;
    Terms terms_;
};

/// Collects contributions per key, then reduces each coefficient once.
template <class Key, class S>
class TermBuilder {
public:
    using Acc = typename ScalarTraits<S>::Accumulator;

    Acc& operator[](const Key& k) { return acc_[k]; }

    template <class Poly>
    Poly build(int n) const {
        Poly p(n);
        for (const auto& [k, a] : acc_) p.add_term(k, a.result());
        return p;
    }

private:
    std::map<Key, Acc> acc_;
};

}  // namespace detail

template <class S>
class ActionPoly;

/// Polynomial sum_{alpha,beta} c z^alpha zbar^beta.
template <class S>
class PhasePoly : public detail::SparseTerms<PhaseMonomial, S> {
    using Base = detail::SparseTerms<PhaseMonomial, S>;
    using Traits = ScalarTraits<S>;

public:
    using Scalar = S;

    explicit PhasePoly(int n = 1) : Base(n) {}

    PhasePoly& operator+=(const PhasePoly& o) {
        this->add_all(o, false);
        return *this;
    }
    PhasePoly& operator-=(const PhasePoly& o) {
        this->add_all(o, true);
        return *this;
    }
    PhasePoly& operator*=(const S& c) {
        this->scale_all(c);
        return *this;
    }
    friend PhasePoly operator+(PhasePoly a, const PhasePoly& b) { return a += b; }
    friend PhasePoly operator-(PhasePoly a, const PhasePoly& b) { return a -= b; }
    friend PhasePoly operator*(PhasePoly a, const S& c) { return a *= c; }
    friend bool operator==(const PhasePoly& a, const PhasePoly& b) {
        return a.n_ == b.n_ && a.terms_ == b.terms_;
    }

    friend PhasePoly operator*(const PhasePoly& a, const PhasePoly& b) {
        a.require_same_dim(b);
        detail::TermBuilder<PhaseMonomial, S> out;
        const GaussianRational one(1);
        for (const auto& [ma, ca] : a.terms_) {
            for (const auto& [mb, cb] : b.terms_) {
                PhaseMonomial m;
                for (std::size_t i = 0; i < m.e.size(); ++i) m.e[i] = static_cast<std::uint8_t>(ma.e[i] + mb.e[i]);
                out[m].add_product(ca, cb, one);
            }
        }
        return out.template build<PhasePoly>(a.n_);
    }

    int max_degree() const {
        int d = -1;
        for (const auto& [m, c] : this->terms_) d = std::max(d, m.degree());
        return d;
    }
    /// The common degree of all terms; nullopt for the zero or an
    /// inhomogeneous polynomial.
    std::optional<int> homogeneous_degree() const {
        std::optional<int> d;
        for (const auto& [m, c] : this->terms_) {
            if (d && *d != m.degree()) return std::nullopt;
            d = m.degree();
        }
        return d;
    }
    PhasePoly degree_part(int d) const {
        PhasePoly p(this->n_);
        for (const auto& [m, c] : this->terms_) {
            if (m.degree() == d) p.terms_.emplace(m, c);
        }
        return p;
    }
    PhasePoly truncated(int max_degree) const {
        PhasePoly p(this->n_);
        for (const auto& [m, c] : this->terms_) {
            if (m.degree() <= max_degree) p.terms_.emplace(m, c);
        }
        return p;
    }
    PhasePoly off_diagonal() const {
        PhasePoly p(this->n_);
        for (const auto& [m, c] : this->terms_) {
            if (!m.is_diagonal()) p.terms_.emplace(m, c);
        }
        return p;
    }

    /// Coefficient at (beta, alpha) equals the conjugate of that at (alpha, beta).
    bool is_real_valued() const {
        for (const auto& [m, c] : this->terms_) {
            if (!(this->coeff(m.swapped()) == Traits::conj(c))) return false;
        }
        return true;
    }
    /// alpha_i + beta_i even for every stored term and every i.
    bool is_even_symmetric() const {
        return std::all_of(this->terms_.begin(), this->terms_.end(), [](const auto& t) { return t.first.is_even(); });
    }
    /// The complex-conjugate function.
    PhasePoly conj() const {
        PhasePoly p(this->n_);
        for (const auto& [m, c] : this->terms_) p.terms_.emplace(m.swapped(), Traits::conj(c));
        return p;
    }
};

/// Polynomial sum_m c_m s^m in the actions s_i = |z_i|^2.
template <class S>
class ActionPoly : public detail::SparseTerms<MultiIndex, S> {
    using Base = detail::SparseTerms<MultiIndex, S>;
    using Traits = ScalarTraits<S>;

public:
    using Scalar = S;

    explicit ActionPoly(int n = 1) : Base(n) {}

    ActionPoly& operator+=(const ActionPoly& o) {
        this->add_all(o, false);
        return *this;
    }
    ActionPoly& operator-=(const ActionPoly& o) {
        this->add_all(o, true);
        return *this;
    }
    ActionPoly& operator*=(const S& c) {
        this->scale_all(c);
        return *this;
    }
    friend ActionPoly operator+(ActionPoly a, const ActionPoly& b) { return a += b; }
    friend ActionPoly operator-(ActionPoly a, const ActionPoly& b) { return a -= b; }
    friend bool operator==(const ActionPoly& a, const ActionPoly& b) {
        return a.n_ == b.n_ && a.terms_ == b.terms_;
    }

    std::optional<int> homogeneous_degree() const {
        std::optional<int> d;
        for (const auto& [m, c] : this->terms_) {
            if (d && *d != m.degree()) return std::nullopt;
            d = m.degree();
        }
        return d;
    }
    ActionPoly degree_part(int d) const {
        ActionPoly p(this->n_);
        for (const auto& [m, c] : this->terms_) {
            if (m.degree() == d) p.add_term(m, c);
        }
        return p;
    }
    bool is_real() const {
        return std::all_of(this->terms_.begin(), this->terms_.end(),
                           [](const auto& t) { return Traits::is_real(t.second); });
    }

    /// Evaluates at real action values with the given numeric frequencies
    /// substituted (ignored for float coefficients).
    Complex evaluate(std::span<const double> s, std::span<const double> omega) const {
        Complex sum = 0.0;
        for (const auto& [m, c] : this->terms_) {
            double mono = 1.0;
            for (int i = 0; i < this->n_; ++i) {
                for (int p = 0; p < m[i]; ++p) mono *= s[static_cast<std::size_t>(i)];
            }
            sum += Traits::to_complex(c, omega) * mono;
        }
        return sum;
    }
};

/// Polynomial in real coordinates: key alpha = x exponents, beta = xi exponents.
template <class S>
class RealPoly : public detail::SparseTerms<PhaseMonomial, S> {
    using Base = detail::SparseTerms<PhaseMonomial, S>;

public:
    using Scalar = S;

    explicit RealPoly(int n = 1) : Base(n) {}

    RealPoly& operator+=(const RealPoly& o) {
        this->add_all(o, false);
        return *this;
    }
    RealPoly& operator-=(const RealPoly& o) {
        this->add_all(o, true);
        return *this;
    }
    friend bool operator==(const RealPoly& a, const RealPoly& b) { return a.n_ == b.n_ && a.terms_ == b.terms_; }
};

// ---------------------------------------------------------------- operations

/// Diagonal monomial z^m zbar^m = s^m as a phase polynomial.
template <class S>
PhasePoly<S> embed(const ActionPoly<S>& a) {
    PhasePoly<S> p(a.dim());
    for (const auto& [m, c] : a.terms()) p.add_term(PhaseMonomial::diagonal(m), c);
    return p;
}

/// Keeps exactly the terms with alpha = beta.
template <class S>
ActionPoly<S> diagonal_part(const PhasePoly<S>& p) {
    ActionPoly<S> a(p.dim());
    for (const auto& [m, c] : p.terms()) {
        if (m.is_diagonal()) a.add_term(m.alpha_index(), c);
    }
    return a;
}

/// H_1 = sum_i omega_i z_i zbar_i.
template <class S>
PhasePoly<S> harmonic_part(const Frequencies& w) {
    PhasePoly<S> h(w.dim());
    for (int i = 0; i < w.dim(); ++i) {
        std::array<int, kMaxDim> m{};
        m[static_cast<std::size_t>(i)] = 1;
        h.add_term(PhaseMonomial::diagonal(MultiIndex::unit(i)),
                   ScalarTraits<S>::linear_form(std::span<const int>(m.data(), static_cast<std::size_t>(w.dim())), w));
    }
    return h;
}

/// {A, B} = sum_j A_xi B_x - A_x B_xi, evaluated in complex coordinates as
/// 2i sum_j (A_{z_j} B_{zbar_j} - A_{zbar_j} B_{z_j}).
/// With `max_degree`, products whose degree would exceed it are skipped.
/// When both arguments are known to be real-valued, only one monomial of
/// each conjugate pair is computed and the other is filled in.
template <class S>
PhasePoly<S> poisson_bracket(const PhasePoly<S>& a, const PhasePoly<S>& b, int max_degree = -1,
                             bool real_valued = false) {
    if (a.dim() != b.dim()) throw ValidationError("poisson_bracket: dimension mismatch");
    const int n = a.dim();
    detail::TermBuilder<PhaseMonomial, S> out;
    for (const auto& [ma, ca] : a.terms()) {
        for (const auto& [mb, cb] : b.terms()) {
            if (max_degree >= 0 && ma.degree() + mb.degree() - 2 > max_degree) continue;
            for (int j = 0; j < n; ++j) {
                const long w = static_cast<long>(ma.alpha(j)) * mb.beta(j) - static_cast<long>(ma.beta(j)) * mb.alpha(j);
                if (w == 0) continue;
                PhaseMonomial m;
                for (std::size_t t = 0; t < m.e.size(); ++t) m.e[t] = static_cast<std::uint8_t>(ma.e[t] + mb.e[t]);
                m.set_alpha(j, m.alpha(j) - 1);
                m.set_beta(j, m.beta(j) - 1);
                if (real_valued && m.swapped() < m) continue;
                out[m].add_product(ca, cb, GaussianRational(mpq_class(0), mpq_class(2 * w)));
            }
        }
    }
    auto result = out.template build<PhasePoly<S>>(n);
    if (real_valued) {
        std::vector<std::pair<PhaseMonomial, S>> mirrored;
        for (const auto& [m, c] : result.terms()) {
            if (m < m.swapped()) mirrored.emplace_back(m.swapped(), ScalarTraits<S>::conj(c));
        }
        for (auto& [m, c] : mirrored) result.add_term(m, c);
    }
    return result;
}

namespace detail {

inline mpz_class binomial(int n, int k) {
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return r;
}

/// One-coordinate expansion of x^a xi^b in (z, zbar): coefficient per (p, q)
/// meaning z^p zbar^q.
inline std::map<std::pair<int, int>, GaussianRational> real_monomial_to_complex(int a, int b) {
    // x = (z + zbar)/2, xi = (z - zbar)/(2i)
    std::map<std::pair<int, int>, GaussianRational> out;
    GaussianRational pref(mpq_class(1));
    for (int t = 0; t < a; ++t) pref.re /= 2;
    GaussianRational inv2i(mpq_class(0), mpq_class(-1, 2));  // 1/(2i) = -i/2
    for (int t = 0; t < b; ++t) pref *= inv2i;
    for (int r = 0; r <= a; ++r) {
        for (int s = 0; s <= b; ++s) {
            mpq_class c(binomial(a, r) * binomial(b, s));
            if (s % 2) c = -c;
            out[{a - r + b - s, r + s}] += pref * GaussianRational(c);
        }
    }
    return out;
}

/// One-coordinate expansion of z^p zbar^q in (x, xi).
inline std::map<std::pair<int, int>, GaussianRational> complex_monomial_to_real(int p, int q) {
    // z = x + i xi, zbar = x - i xi
    std::map<std::pair<int, int>, GaussianRational> out;
    for (int r = 0; r <= p; ++r) {
        for (int s = 0; s <= q; ++s) {
            // x^{p-r} (i xi)^r * x^{q-s} (-i xi)^s
            GaussianRational c(mpq_class(binomial(p, r) * binomial(q, s)));
            for (int t = 0; t < r; ++t) c *= GaussianRational::i();
            for (int t = 0; t < s; ++t) c *= GaussianRational(mpq_class(0), mpq_class(-1));
            out[{p - r + q - s, r + s}] += c;
        }
    }
    return out;
}

/// Shared driver: applies a per-coordinate expansion to every term.
template <class Out, class In, class Expand>
Out change_coordinates(const In& in, Expand expand) {
    const int n = in.dim();
    TermBuilder<PhaseMonomial, typename In::Scalar> out;
    for (const auto& [mono, c] : in.terms()) {
        std::vector<std::map<std::pair<int, int>, GaussianRational>> parts;
        parts.reserve(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) parts.push_back(expand(mono.alpha(j), mono.beta(j)));
        // Cartesian product over coordinates.
        std::vector<std::pair<PhaseMonomial, GaussianRational>> acc{{PhaseMonomial{}, GaussianRational(1)}};
        for (int j = 0; j < n; ++j) {
            std::vector<std::pair<PhaseMonomial, GaussianRational>> next;
            for (const auto& [m, f] : acc) {
                for (const auto& [pq, g] : parts[static_cast<std::size_t>(j)]) {
                    if (g.is_zero()) continue;
                    PhaseMonomial mm = m;
                    mm.set_alpha(j, pq.first);
                    mm.set_beta(j, pq.second);
                    next.emplace_back(mm, f * g);
                }
            }
            acc = std::move(next);
        }
        for (const auto& [m, f] : acc) out[m].add_scaled(c, f);
    }
    return out.template build<Out>(n);
}

}  // namespace detail

/// Substitutes x = (z + zbar)/2, xi = (z - zbar)/(2i).
template <class S>
PhasePoly<S> real_to_complex(const RealPoly<S>& p) {
    return detail::change_coordinates<PhasePoly<S>>(p, detail::real_monomial_to_complex);
}

/// Inverse substitution z = x + i xi, zbar = x - i xi.
template <class S>
RealPoly<S> complex_to_real(const PhasePoly<S>& p) {
    return detail::change_coordinates<RealPoly<S>>(p, detail::complex_monomial_to_real);
}

/// Convenience: x^{2k} (pure position monomial) with coefficient c.
template <class S>
RealPoly<S> even_position_monomial(int n, const MultiIndex& k, const S& c) {
    RealPoly<S> r(n);
    PhaseMonomial m;
    for (int i = 0; i < n; ++i) m.set_alpha(i, 2 * k[i]);
    r.add_term(m, c);
    return r;
}

}  // namespace bnf
