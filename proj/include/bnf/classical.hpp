#pragma once

// Forward Birkhoff normal form: the degree-by-degree induction that removes
// non-diagonal monomials with Lie transforms, including the variant with a
// known inverse-metric perturbation.

#include <optional>
#include <vector>

#include "bnf/jets.hpp"
#include "bnf/phase_poly.hpp"

namespace bnf {

/// Coefficient type recovered from normal-form data: exact rationals in
/// exact mode, doubles in float mode.
template <class S>
using JetCoefficient = std::conditional_t<ScalarTraits<S>::exact, mpq_class, double>;

template <class S>
struct HomologicalSolution {
    PhasePoly<S> generator;   // G, diagonal-free
    ActionPoly<S> normal;     // H = diagonal part of R
};

template <class S>
struct NormalForm {
    Frequencies omega;
    int order = 2;
    std::vector<ActionPoly<S>> H;       // H[i - 2] = H_i, homogeneous of degree i in s
    std::vector<PhasePoly<S>> G;        // G[i - 2] = G_i, degree 2i, diagonal-free
    std::vector<PhasePoly<S>> R;        // recorded degree-2i remainder R_i
    std::vector<PhasePoly<S>> R_sharp;  // R_i minus the potential and metric input at degree 2i

    const ActionPoly<S>& h(int i) const { return H.at(static_cast<std::size_t>(i - 2)); }
    const PhasePoly<S>& g(int i) const { return G.at(static_cast<std::size_t>(i - 2)); }
    int dim() const { return omega.dim(); }
};

namespace detail {

template <class S>
bool approx_real_valued(const PhasePoly<S>& p) {
    if constexpr (ScalarTraits<S>::exact) {
        return p.is_real_valued();
    } else {
        for (const auto& [m, c] : p.terms()) {
            if (!ScalarTraits<S>::approx_equal(p.coeff(m.swapped()), std::conj(c))) return false;
        }
        return true;
    }
}

inline void check_order(int order, std::optional<int> available, const char* what) {
    if (order < 2) throw ValidationError("normal form order must be >= 2");
    if (available && order > *available) {
        throw ValidationError(std::string("order exceeds ") + what + " data");
    }
}

}  // namespace detail

/// Solves {H_1, G} = R - H for homogeneous R of even degree.  Every monomial
/// z^a zbar^b is an eigenvector of {H_1, .} with eigenvalue -2i<omega, a - b>,
/// so G takes r_ab / (-2i<omega, a - b>) off the diagonal and H the diagonal.
template <class S>
HomologicalSolution<S> solve_homological(const PhasePoly<S>& r, const Frequencies& w) {
    if (r.dim() != w.dim()) throw ValidationError("solve_homological: dimension mismatch");
    if (!r.is_zero()) {
        auto d = r.homogeneous_degree();
        if (!d || *d % 2 != 0) throw ValidationError("solve_homological: R must be homogeneous of even degree");
        if (!r.is_even_symmetric()) throw ValidationError("solve_homological: R must be even-symmetric");
        if (!detail::approx_real_valued(r)) throw ValidationError("solve_homological: R must be real-valued");
    }
    HomologicalSolution<S> out{PhasePoly<S>(r.dim()), ActionPoly<S>(r.dim())};
    const GaussianRational half_i(mpq_class(0), mpq_class(1, 2));  // 1/(-2i)
    const auto n = static_cast<std::size_t>(w.dim());
    for (const auto& [m, c] : r.terms()) {
        if (m.is_diagonal()) {
            out.normal.add_term(m.alpha_index(), c);
            continue;
        }
        const auto diff = m.difference();
        S g = scalar_div_linear_form(c, std::span<const int>(diff.data(), n), w);
        ScalarTraits<S>::scale(g, half_i);
        out.generator.add_term(m, g);
    }
    return out;
}

/// sum_k (1/k!) ad_G^k (F) truncated at total degree `degree_cap`, with
/// ad_G(F) = {G, F}.
template <class S>
PhasePoly<S> exp_ad(const PhasePoly<S>& g, const PhasePoly<S>& f, int degree_cap) {
    if (g.dim() != f.dim()) throw ValidationError("exp_ad: dimension mismatch");
    PhasePoly<S> result = f.truncated(degree_cap);
    if (g.is_zero()) return result;
    auto d = g.homogeneous_degree();
    if (!d || *d < 4) throw ValidationError("exp_ad: generator must be homogeneous of degree >= 4");
    const bool real = detail::approx_real_valued(g) && detail::approx_real_valued(result);
    PhasePoly<S> term = result;
    for (int k = 1;; ++k) {
        term = poisson_bracket(g, term, degree_cap, real);
        if (term.is_zero()) break;
        term.scale(GaussianRational(mpq_class(1, k)));
        result += term;
    }
    return result;
}

/// H_1 plus the potential and metric terms of degree <= 2N, in (z, zbar).
template <class S, class T>
PhasePoly<S> initial_hamiltonian(const BasicPotentialJet<T>& jet, const Frequencies& w,
                                 const std::optional<MetricJet>& metric, int order) {
    if (jet.dim() != w.dim()) throw ValidationError("jet and frequency dimensions differ");
    if (metric && metric->dim() != w.dim()) throw ValidationError("metric and frequency dimensions differ");
    PhasePoly<S> h = harmonic_part<S>(w);
    RealPoly<S> pert = potential_real<S>(jet, 2, order);
    if (metric) pert += metric_real<S>(*metric, 2, order);
    h += real_to_complex(pert);
    return h;
}

/// Potential plus metric input at exactly degree 2i, in (z, zbar).
template <class S, class T>
PhasePoly<S> input_part(const BasicPotentialJet<T>& jet, const std::optional<MetricJet>& metric, int i) {
    RealPoly<S> pert = potential_real<S>(jet, i, i);
    if (metric) pert += metric_real<S>(*metric, i, i);
    return real_to_complex(pert);
}

template <class S, class T>
NormalForm<S> classical_bnf(const BasicPotentialJet<T>& jet, const Frequencies& w,
                            const std::optional<MetricJet>& metric, int order) {
    detail::check_order(order, jet.max_half_degree(), "potential jet");
    if (metric) detail::check_order(order, metric->max_half_degree(), "metric jet");
    const int cap = 2 * order;

    NormalForm<S> nf{w, order, {}, {}, {}, {}};
    PhasePoly<S> ham = initial_hamiltonian<S>(jet, w, metric, order);
    for (int i = 2; i <= order; ++i) {
        PhasePoly<S> r = ham.degree_part(2 * i);
        auto sol = solve_homological(r, w);
        nf.R_sharp.push_back(r - input_part<S>(jet, metric, i));
        nf.R.push_back(std::move(r));
        ham = exp_ad(sol.generator, ham, cap);
        nf.G.push_back(std::move(sol.generator));
        nf.H.push_back(std::move(sol.normal));
    }
    return nf;
}

/// sum_i omega_i s_i + sum_i H_i embedded in phase space.
template <class S>
PhasePoly<S> normal_form_hamiltonian(const NormalForm<S>& nf) {
    PhasePoly<S> out = harmonic_part<S>(nf.omega);
    for (const auto& h : nf.H) out += embed(h);
    return out;
}

/// Re-conjugates the degree <= 2N Hamiltonian by every generator of `nf`
/// and returns what is left after subtracting the claimed normal form.
template <class S, class T>
PhasePoly<S> verify_conjugation(const NormalForm<S>& nf, const BasicPotentialJet<T>& jet,
                                const std::optional<MetricJet>& metric) {
    const int cap = 2 * nf.order;
    PhasePoly<S> ham = initial_hamiltonian<S>(jet, nf.omega, metric, nf.order);
    for (const auto& g : nf.G) ham = exp_ad(g, ham, cap);
    return (ham - normal_form_hamiltonian(nf)).truncated(cap);
}

/// {H_1, G_i} + H_i - R_i for the recorded data of step i.
template <class S>
PhasePoly<S> homological_residual(const NormalForm<S>& nf, int i) {
    const auto idx = static_cast<std::size_t>(i - 2);
    return poisson_bracket(harmonic_part<S>(nf.omega), nf.G.at(idx)) + embed(nf.H.at(idx)) - nf.R.at(idx);
}

// ---------------------------------------------------------------- quadratic normalization

/// Result of rescaling x_i -> lambda_i x_i, xi_i -> xi_i / lambda_i with
/// lambda_i = u_i^{-1/4}, which turns |xi|^2 + sum u_i x_i^2 into
/// sum omega_i (x_i^2 + xi_i^2) with omega_i = sqrt(u_i).
struct ExactQuadraticNormalization {
    std::vector<mpq_class> omega;
    std::vector<mpq_class> lambda_squared;
    PotentialJet jet;
};

struct QuadraticNormalization {
    std::vector<double> omega;
    std::vector<double> lambda;
    NumericPotentialJet jet;
};

/// Exact mode: every u_i must be the square of a positive rational.
ExactQuadraticNormalization normalize_quadratic_exact(const std::vector<mpq_class>& u, const PotentialJet& jet);

QuadraticNormalization normalize_quadratic(const std::vector<double>& u, const NumericPotentialJet& jet);

/// Undoes the rescaling on a jet expressed in normalized coordinates.
NumericPotentialJet denormalize_jet(const std::vector<double>& lambda, const NumericPotentialJet& jet);

}  // namespace bnf
