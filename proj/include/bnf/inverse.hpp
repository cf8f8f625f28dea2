#pragma once

// Recovery of the potential's Taylor coefficients from the normal-form
// sequence H_2..H_N by replaying the forward induction on known data.

#include <optional>
#include <span>
#include <vector>

#include "bnf/classical.hpp"

namespace bnf {

/// prod_i binom(2k_i, k_i) / 4^{k_i}: the coefficient of |z|^{2k} in x^{2k}.
mpq_class diagonal_weight(const MultiIndex& k);

/// Degree-2i part of the known Hamiltonian conjugated by G_2..G_{i-1},
/// minus the metric input at degree 2i.  `known` holds H_1, the metric
/// terms and V_2..V_{i-1}; the result is the artifact R_i^sharp.
template <class S>
PhasePoly<S> artifact_term(std::span<const PhasePoly<S>> generators, const PhasePoly<S>& known, int i,
                           const std::optional<MetricJet>& metric = std::nullopt) {
    if (i < 2) throw ValidationError("artifact_term: step must be >= 2");
    if (generators.size() < static_cast<std::size_t>(i - 2)) {
        throw ValidationError("artifact_term: missing generators G_2..G_{i-1}");
    }
    PhasePoly<S> ham = known.truncated(2 * i);
    for (int j = 2; j < i; ++j) ham = exp_ad(generators[static_cast<std::size_t>(j - 2)], ham, 2 * i);
    PhasePoly<S> out = ham.degree_part(2 * i);
    if (metric) out -= real_to_complex(metric_real<S>(*metric, i, i));
    return out;
}

template <class S>
BasicPotentialJet<JetCoefficient<S>> recover_potential(std::span<const ActionPoly<S>> normal_form,
                                                       const Frequencies& w,
                                                       const std::optional<MetricJet>& metric = std::nullopt) {
    using Coeff = JetCoefficient<S>;
    const int n = w.dim();
    const int order = static_cast<int>(normal_form.size()) + 1;
    if (order < 2) throw ValidationError("recover_potential: need at least H_2");
    if (metric) {
        if (metric->dim() != n) throw ValidationError("metric and frequency dimensions differ");
        detail::check_order(order, metric->max_half_degree(), "metric jet");
    }
    for (int i = 2; i <= order; ++i) {
        const auto& h = normal_form[static_cast<std::size_t>(i - 2)];
        if (h.dim() != n) throw ValidationError("recover_potential: dimension mismatch");
        auto d = h.homogeneous_degree();
        if (!h.is_zero() && (!d || *d != i)) {
            throw ValidationError("recover_potential: H_" + std::to_string(i) + " is not homogeneous of degree " +
                                  std::to_string(i));
        }
    }

    const int cap = 2 * order;
    BasicPotentialJet<Coeff> jet(n, order);
    std::vector<PhasePoly<S>> generators;

    // Running image of the known Hamiltonian under the generators found so far.
    PhasePoly<S> ham = harmonic_part<S>(w);
    if (metric) ham += real_to_complex(metric_real<S>(*metric, 2, order));

    for (int i = 2; i <= order; ++i) {
        const ActionPoly<S> known_diag = diagonal_part(ham.degree_part(2 * i));
        const ActionPoly<S> residue = normal_form[static_cast<std::size_t>(i - 2)] - known_diag;

        BasicPotentialJet<Coeff> step(n);
        for (const auto& [k, d] : residue.terms()) {
            const mpq_class wgt = diagonal_weight(k);
            if constexpr (ScalarTraits<S>::exact) {
                auto q = d.as_rational();
                if (!q) {
                    throw InconsistentData("recover_potential: diagonal residue at degree " + std::to_string(i) +
                                           " depends on the frequencies: " + d.to_string());
                }
                step.set(k, *q / wgt);
                jet.set(k, *q / wgt);
            } else {
                step.set(k, d.real() / wgt.get_d());
                jet.set(k, d.real() / wgt.get_d());
            }
        }

        PhasePoly<S> v = real_to_complex(potential_real<S>(step, i, i));
        for (const auto& g : generators) v = exp_ad(g, v, cap);
        ham += v;

        auto sol = solve_homological(ham.degree_part(2 * i), w);
        ham = exp_ad(sol.generator, ham, cap);
        generators.push_back(std::move(sol.generator));
    }
    return jet;
}

template <class S>
BasicPotentialJet<JetCoefficient<S>> recover_potential(const NormalForm<S>& nf,
                                                       const std::optional<MetricJet>& metric = std::nullopt) {
    return recover_potential<S>(std::span<const ActionPoly<S>>(nf.H), nf.omega, metric);
}

}  // namespace bnf
