#pragma once

// Seeded generators shared by the property suites.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "bnf/inverse.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline mpq_class random_rational(Rng& rng, int bound = 100) {
    std::uniform_int_distribution<int> num(-bound, bound);
    std::uniform_int_distribution<int> den(1, bound);
    mpq_class q(num(rng), den(rng));
    q.canonicalize();
    return q;
}

inline mpq_class random_nonzero_rational(Rng& rng, int bound = 100) {
    for (;;) {
        mpq_class q = random_rational(rng, bound);
        if (sgn(q) != 0) return q;
    }
}

/// Every exponent vector of length n with entries summing to lo..hi.
inline std::vector<std::vector<int>> exponent_vectors(int n, int lo, int hi) {
    std::vector<std::vector<int>> out;
    std::vector<int> k(static_cast<std::size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int axis, int used) {
        if (axis == n) {
            if (used >= lo) out.push_back(k);
            return;
        }
        for (int v = 0; used + v <= hi; ++v) {
            k[static_cast<std::size_t>(axis)] = v;
            rec(axis + 1, used + v);
        }
        k[static_cast<std::size_t>(axis)] = 0;
    };
    rec(0, 0);
    return out;
}

/// Random even jet: each monomial x^{2k}, 2 <= |k| <= max_half, kept with
/// probability `density`.
inline bnf::PotentialJet random_jet(Rng& rng, int n, int max_half, double density = 0.5) {
    std::bernoulli_distribution keep(density);
    bnf::PotentialJet jet(n, max_half);
    for (const auto& k : exponent_vectors(n, 2, max_half)) {
        if (keep(rng)) jet.set(bnf::MultiIndex::from(k), random_rational(rng));
    }
    return jet;
}

/// Random diagonal metric h^{ii}(x^2), |k| <= max_half - 1.
inline bnf::MetricJet random_metric(Rng& rng, int n, int max_half, double density = 0.3) {
    std::bernoulli_distribution keep(density);
    bnf::MetricJet m(n, max_half);
    for (int i = 0; i < n; ++i) {
        for (const auto& k : exponent_vectors(n, 1, max_half - 1)) {
            if (keep(rng)) m.set(i, i, bnf::MultiIndex::from(k), random_rational(rng, 20));
        }
    }
    return m;
}

/// Random Gaussian-rational phase polynomial with `terms` monomials of total
/// degree <= max_degree.
inline bnf::PhasePoly<bnf::ExactScalar> random_phase_poly(Rng& rng, int n, int max_degree, int terms) {
    std::uniform_int_distribution<int> deg(0, max_degree);
    std::uniform_int_distribution<int> slot(0, 2 * n - 1);
    bnf::PhasePoly<bnf::ExactScalar> p(n);
    for (int t = 0; t < terms; ++t) {
        std::vector<int> a(static_cast<std::size_t>(n), 0);
        std::vector<int> b(static_cast<std::size_t>(n), 0);
        const int d = deg(rng);
        for (int e = 0; e < d; ++e) {
            const int s = slot(rng);
            if (s < n) {
                ++a[static_cast<std::size_t>(s)];
            } else {
                ++b[static_cast<std::size_t>(s - n)];
            }
        }
        p.add_term(bnf::PhaseMonomial::from(a, b),
                   bnf::ExactScalar(bnf::GaussianRational(random_rational(rng, 20), random_rational(rng, 20))));
    }
    return p;
}

/// P + conj(P): real-valued.
inline bnf::PhasePoly<bnf::ExactScalar> realify(const bnf::PhasePoly<bnf::ExactScalar>& p) { return p + p.conj(); }

/// Keeps only terms with alpha_i + beta_i even for every i.
inline bnf::PhasePoly<bnf::ExactScalar> even_part(const bnf::PhasePoly<bnf::ExactScalar>& p) {
    bnf::PhasePoly<bnf::ExactScalar> out(p.dim());
    for (const auto& [m, c] : p.terms()) {
        if (m.is_even()) out.add_term(m, c);
    }
    return out;
}

inline bnf::RealPoly<bnf::ExactScalar> random_real_poly(Rng& rng, int n, int max_degree, int terms) {
    std::uniform_int_distribution<int> deg(0, max_degree);
    std::uniform_int_distribution<int> slot(0, 2 * n - 1);
    bnf::RealPoly<bnf::ExactScalar> p(n);
    for (int t = 0; t < terms; ++t) {
        std::vector<int> a(static_cast<std::size_t>(n), 0);
        std::vector<int> b(static_cast<std::size_t>(n), 0);
        const int d = deg(rng);
        for (int e = 0; e < d; ++e) {
            const int s = slot(rng);
            if (s < n) {
                ++a[static_cast<std::size_t>(s)];
            } else {
                ++b[static_cast<std::size_t>(s - n)];
            }
        }
        p.add_term(bnf::PhaseMonomial::from(a, b), bnf::ExactScalar(random_rational(rng, 30)));
    }
    return p;
}

/// Matrix of X^4 in the oscillator basis, X = a + a^dagger, size `dim`.
inline std::vector<std::vector<double>> x4_matrix(int dim) {
    const auto d = static_cast<std::size_t>(dim + 4);
    std::vector<std::vector<double>> x(d, std::vector<double>(d, 0.0));
    for (std::size_t m = 0; m + 1 < d; ++m) {
        x[m][m + 1] = std::sqrt(static_cast<double>(m + 1));
        x[m + 1][m] = x[m][m + 1];
    }
    auto mul = [&](const auto& a, const auto& b) {
        std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = 0; k < d; ++k)
                for (std::size_t j = 0; j < d; ++j) c[i][j] += a[i][k] * b[k][j];
        return c;
    };
    const auto x2 = mul(x, x);
    auto x4 = mul(x2, x2);
    x4.resize(static_cast<std::size_t>(dim));
    for (auto& row : x4) row.resize(static_cast<std::size_t>(dim));
    return x4;
}

/// Rayleigh-Schroedinger corrections for -hbar^2 d^2 + x^2 + x^4 at hbar = 1:
/// first and second order in the perturbation, per level k.  With
/// x = sqrt(hbar/2) X the perturbation is (hbar^2/4) X^4 and the unperturbed
/// levels are hbar (2k+1).
inline std::pair<double, double> quartic_rs(int k) {
    const auto x4 = x4_matrix(k + 8);
    const auto kk = static_cast<std::size_t>(k);
    const double first = x4[kk][kk] / 4.0;
    double second = 0.0;
    for (std::size_t m = 0; m < x4.size(); ++m) {
        if (m == kk) continue;
        const double v = x4[m][kk] / 4.0;
        second += v * v / (2.0 * (static_cast<double>(k) - static_cast<double>(m)));
    }
    return {first, second};
}

}  // namespace testing
