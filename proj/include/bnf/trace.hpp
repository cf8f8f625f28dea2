#pragma once

// Smoothed spectral traces sum_j psi(E_j / eps) exp(-i t E_j / hbar), from a
// computed spectrum or from the model lattice p((2k+1) hbar, hbar), and their
// expansion in powers of hbar.

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "bnf/quantum.hpp"

namespace bnf {

/// psi(s) = 1 for s <= 1/2, 0 for s >= 1, m(1-s) / (m(1-s) + m(s-1/2)) in
/// between, m(t) = exp(-1/t).
double bump(double s);

/// The finite sum over the sample.  The sample must contain every level
/// below eps.
Complex trace_spectrum(std::span<const double> energies, double hbar, double t, double epsilon);

/// prod_j 1 / (2i sin(omega_j t)).
Complex harmonic_leading(std::span<const double> omega, double t);

struct ExpansionFit {
    std::vector<Complex> a;          // a_0..a_L
    std::vector<Complex> residuals;  // per input trace
};

/// Least-squares fit of tr(hbar) ~ sum_{l <= L} a_l hbar^l.  Needs L + 2
/// distinct hbar values whose consecutive ratios are at least 1.1.
ExpansionFit fit_expansion(const std::vector<std::pair<double, Complex>>& traces, int L);

namespace detail {

/// Calls f(k) for every lattice point k (as a vector of ints) with
/// sum_i omega_i (2k_i + 1) hbar <= bound.
template <class F>
void for_each_lattice_point(std::span<const double> omega, double hbar, double bound, F&& f) {
    const int n = static_cast<int>(omega.size());
    std::vector<int> k(static_cast<std::size_t>(n), 0);
    long visited = 0;
    auto rec = [&](auto&& self, int axis, double used) -> void {
        if (axis == n) {
            if (++visited > 50'000'000) throw ValidationError("trace_model: lattice too large for the cutoff");
            f(std::as_const(k));
            return;
        }
        double rest = 0.0;
        for (int j = axis + 1; j < n; ++j) rest += omega[static_cast<std::size_t>(j)] * hbar;
        for (int v = 0;; ++v) {
            const double e = used + omega[static_cast<std::size_t>(axis)] * (2 * v + 1) * hbar;
            if (e + rest > bound) break;
            k[static_cast<std::size_t>(axis)] = v;
            self(self, axis + 1, e);
        }
        k[static_cast<std::size_t>(axis)] = 0;
    };
    rec(rec, 0, 0.0);
}

}  // namespace detail

/// sum_k psi(eps^{-1} p((2k+1) hbar, hbar)) exp(-i t p / hbar) over the lattice
/// k with linear part sum omega_i (2k_i + 1) hbar <= 2 eps.  Lattice points on
/// the outer shell must lie beyond the cutoff, otherwise the sum would be
/// truncated and MathError is thrown.
template <class S>
Complex trace_model(const std::vector<ActionPoly<S>>& p, std::span<const double> omega, double t, double hbar,
                    double epsilon) {
    if (!(hbar > 0.0) || !(epsilon > 0.0)) throw ValidationError("trace_model: hbar and epsilon must be positive");
    if (p.empty() || static_cast<int>(omega.size()) != p.front().dim()) {
        throw ValidationError("trace_model: frequencies do not match the model");
    }
    for (double w : omega) {
        if (!(w > 0.0)) throw MathError("trace_model: linear part of p_0 is not positive definite");
    }
    const double bound = 2.0 * epsilon;
    double min_w = omega[0];
    for (double w : omega) min_w = std::min(min_w, w);
    Complex sum = 0.0;
    bool leaks = false;
    std::vector<double> s(omega.size());
    detail::for_each_lattice_point(omega, hbar, bound, [&](const std::vector<int>& k) {
        double lin = 0.0;
        for (std::size_t i = 0; i < omega.size(); ++i) {
            s[i] = (2 * k[i] + 1) * hbar;
            lin += omega[i] * s[i];
        }
        const double e = model_value(p, s, hbar, omega);
        if (lin > bound - 2.0 * min_w * hbar && e < epsilon) leaks = true;
        const double w = bump(e / epsilon);
        if (w != 0.0) sum += w * std::exp(Complex(0.0, -t * e / hbar));
    });
    if (leaks) throw MathError("trace_model: model is not confining within twice the cutoff");
    return sum;
}

}  // namespace bnf
