#pragma once

// Taylor data of the symmetric potential V(x^2) and of the inverse-metric
// perturbation h^{ij}(x^2) xi_i xi_j.

#include <map>
#include <optional>
#include <tuple>

#include <gmpxx.h>

#include "bnf/phase_poly.hpp"

namespace bnf {

/// V_{>=4}(x) = sum_k c_k x^{2k}, |k| >= 2.  The quadratic part lives in
/// Frequencies.  `max_half_degree` records how far the jet is known; an empty
/// value means the potential is an exact polynomial (known to all orders).
template <class T>
class BasicPotentialJet {
public:
    explicit BasicPotentialJet(int n, std::optional<int> max_half_degree = std::nullopt)
        : n_(n), max_half_degree_(max_half_degree) {
        detail::check_dim(n);
        if (max_half_degree && *max_half_degree < 2) throw ValidationError("max half-degree must be >= 2");
    }

    int dim() const { return n_; }
    std::optional<int> max_half_degree() const { return max_half_degree_; }
    const std::map<MultiIndex, T>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    void set(const MultiIndex& k, const T& c) {
        const int d = k.degree();
        if (d < 2) throw ValidationError("potential jet terms must have |k| >= 2");
        if (max_half_degree_ && d > *max_half_degree_) throw ValidationError("potential term beyond max half-degree");
        for (int i = n_; i < kMaxDim; ++i) {
            if (k[i] != 0) throw ValidationError("potential term exceeds jet dimension");
        }
        if (c == T(0)) {
            terms_.erase(k);
        } else {
            terms_[k] = c;
        }
    }
    T coeff(const MultiIndex& k) const {
        auto it = terms_.find(k);
        return it == terms_.end() ? T(0) : it->second;
    }

    /// Terms with |k| <= N.
    BasicPotentialJet restricted(int order) const {
        BasicPotentialJet out(n_, max_half_degree_ ? std::optional<int>(std::min(order, *max_half_degree_)) : order);
        for (const auto& [k, c] : terms_) {
            if (k.degree() <= order) out.terms_.emplace(k, c);
        }
        return out;
    }
    int top_degree() const {
        int d = 0;
        for (const auto& [k, c] : terms_) d = std::max(d, k.degree());
        return d;
    }

    friend bool operator==(const BasicPotentialJet& a, const BasicPotentialJet& b) {
        return a.n_ == b.n_ && a.terms_ == b.terms_;
    }

private:
    int n_;
    std::optional<int> max_half_degree_;
    std::map<MultiIndex, T> terms_;
};

using PotentialJet = BasicPotentialJet<mpq_class>;
using NumericPotentialJet = BasicPotentialJet<double>;

/// h^{ij}(x^2) = sum_k h^{ij}_k x^{2k}, |k| >= 1, stored symmetric.
///
/// Only diagonal entries (i == j) are accepted: with the reflection group
/// acting by x_i -> -x_i, an off-diagonal term h^{ij}(x^2) xi_i xi_j is odd
/// and would break the parity of every later polynomial.
class MetricJet {
public:
    using Key = std::tuple<int, int, MultiIndex>;

    explicit MetricJet(int n, std::optional<int> max_half_degree = std::nullopt)
        : n_(n), max_half_degree_(max_half_degree) {
        detail::check_dim(n);
    }

    int dim() const { return n_; }
    std::optional<int> max_half_degree() const { return max_half_degree_; }
    const std::map<Key, mpq_class>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    void set(int i, int j, const MultiIndex& k, const mpq_class& c) {
        if (i < 0 || j < 0 || i >= n_ || j >= n_) throw ValidationError("metric index out of range");
        if (i != j) throw ValidationError("off-diagonal metric entries violate the reflection symmetry");
        if (k.degree() < 1) throw ValidationError("metric jet terms must have |k| >= 1");
        if (max_half_degree_ && k.degree() + 1 > *max_half_degree_) {
            throw ValidationError("metric term beyond max half-degree");
        }
        if (sgn(c) == 0) {
            terms_.erase({i, j, k});
        } else {
            terms_[{i, j, k}] = c;
        }
    }
    mpq_class coeff(int i, int j, const MultiIndex& k) const {
        auto it = terms_.find({std::min(i, j), std::max(i, j), k});
        return it == terms_.end() ? mpq_class(0) : it->second;
    }

private:
    int n_;
    std::optional<int> max_half_degree_;
    std::map<Key, mpq_class> terms_;
};

namespace detail {

template <class S, class T>
S jet_scalar(const T& c) {
    if constexpr (std::is_same_v<T, mpq_class>) {
        return ScalarTraits<S>::from_rational(c);
    } else {
        static_assert(!ScalarTraits<S>::exact, "exact mode requires rational jet coefficients");
        return S(c);
    }
}

}  // namespace detail

/// sum_k c_k x^{2k} restricted to |k| in [lo, hi], in real coordinates.
template <class S, class T>
RealPoly<S> potential_real(const BasicPotentialJet<T>& jet, int lo, int hi) {
    RealPoly<S> r(jet.dim());
    for (const auto& [k, c] : jet.terms()) {
        const int d = k.degree();
        if (d < lo || d > hi) continue;
        r += even_position_monomial<S>(jet.dim(), k, detail::jet_scalar<S>(c));
    }
    return r;
}

/// sum h^{ii}_k x^{2k} xi_i^2 for terms of total degree 2|k| + 2 in [2 lo, 2 hi].
template <class S>
RealPoly<S> metric_real(const MetricJet& metric, int lo, int hi) {
    RealPoly<S> r(metric.dim());
    for (const auto& [key, c] : metric.terms()) {
        const auto& [i, j, k] = key;
        const int d = k.degree() + 1;
        if (d < lo || d > hi) continue;
        PhaseMonomial m;
        for (int t = 0; t < metric.dim(); ++t) m.set_alpha(t, 2 * k[t]);
        m.set_beta(i, m.beta(i) + 1);
        m.set_beta(j, m.beta(j) + 1);
        r.add_term(m, ScalarTraits<S>::from_rational(c));
    }
    return r;
}

}  // namespace bnf
