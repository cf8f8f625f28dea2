#pragma once

// Semiclassical normal form at the level of symbol jets.  Symbols are graded
// by powers of hbar; giving hbar the weight of a quadratic monomial makes the
// Moyal bracket homogeneous, so the induction runs weight by weight exactly as
// in the classical case.  The diagonal symbol is finally rewritten as a
// polynomial in the quantized actions S_i = Op^W(s_i), whose eigenvalues are
// (2k_i + 1) hbar.

#include <vector>

#include "bnf/classical.hpp"

namespace bnf {

/// sum_j hbar^j pieces[j]; pieces[j] holds total degree <= degree_cap - 2j.
template <class S>
struct SemiclassicalJet {
    int n = 1;
    int degree_cap = 0;
    int hbar_cap = 0;
    std::vector<PhasePoly<S>> pieces;

    SemiclassicalJet(int dim, int dcap, int hcap)
        : n(dim), degree_cap(dcap), hbar_cap(hcap), pieces(static_cast<std::size_t>(hcap + 1), PhasePoly<S>(dim)) {
        if (dcap < 0 || hcap < 0) throw ValidationError("caps must be >= 0");
    }

    PhasePoly<S>& operator[](int j) { return pieces.at(static_cast<std::size_t>(j)); }
    const PhasePoly<S>& operator[](int j) const { return pieces.at(static_cast<std::size_t>(j)); }
    bool is_zero() const {
        for (const auto& p : pieces) {
            if (!p.is_zero()) return false;
        }
        return true;
    }
    /// Largest total degree allowed at hbar^j.
    int degree_limit(int j) const { return degree_cap - 2 * j; }
};

template <class S>
struct QuantumNormalForm {
    Frequencies omega;
    int degree_cap = 0;
    int hbar_cap = 0;
    std::vector<ActionPoly<S>> p;  // p[j]: coefficient of hbar^j, a polynomial in S_1..S_n
    std::vector<ActionPoly<S>> weyl_symbol;  // the same operator as a Weyl symbol in s

    int dim() const { return omega.dim(); }
};

namespace detail {

/// (mu, nu) with |mu| + |nu| = k, and the weight k!/(mu! nu!) (-1)^{|nu|}.
struct BidiffIndex {
    std::array<int, kMaxDim> mu{};
    std::array<int, kMaxDim> nu{};
    long weight = 0;
};

inline std::vector<BidiffIndex> bidiff_indices(int n, int k) {
    std::vector<BidiffIndex> out;
    std::array<int, 2 * kMaxDim> v{};
    const int slots = 2 * n;
    // All compositions of k into `slots` parts.
    auto rec = [&](auto&& self, int pos, int left) -> void {
        if (pos == slots - 1) {
            v[static_cast<std::size_t>(pos)] = left;
            BidiffIndex b;
            mpz_class w;
            mpz_fac_ui(w.get_mpz_t(), static_cast<unsigned long>(k));
            int nu_total = 0;
            for (int i = 0; i < n; ++i) {
                b.mu[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)];
                b.nu[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(n + i)];
                nu_total += v[static_cast<std::size_t>(n + i)];
            }
            for (int t = 0; t < slots; ++t) {
                mpz_class f;
                mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(v[static_cast<std::size_t>(t)]));
                w /= f;
            }
            b.weight = (nu_total % 2 ? -1 : 1) * w.get_si();
            out.push_back(b);
            return;
        }
        for (int c = 0; c <= left; ++c) {
            v[static_cast<std::size_t>(pos)] = c;
            self(self, pos + 1, left - c);
        }
    };
    rec(rec, 0, k);
    return out;
}

inline long falling(int a, int m) {
    long r = 1;
    for (int t = 0; t < m; ++t) r *= a - t;
    return r;
}

/// (-2i)^k.
inline GaussianRational minus_two_i_power(int k) {
    GaussianRational r(1);
    const GaussianRational f(mpq_class(0), mpq_class(-2));
    for (int t = 0; t < k; ++t) r *= f;
    return r;
}

}  // namespace detail

/// The bidifferential operator a Lambda^k b, Lambda the Poisson bivector
/// d_x (x) d_xi - d_xi (x) d_x, so that a Lambda b = -{a, b}.  Products whose
/// degree would exceed `max_degree` are skipped.
template <class S>
PhasePoly<S> poisson_power(const PhasePoly<S>& a, const PhasePoly<S>& b, int k, int max_degree = -1) {
    if (a.dim() != b.dim()) throw ValidationError("poisson_power: dimension mismatch");
    if (k < 0) throw ValidationError("poisson_power: order must be >= 0");
    const int n = a.dim();
    if (k == 0) {
        PhasePoly<S> p = a * b;
        return max_degree >= 0 ? p.truncated(max_degree) : p;
    }
    const auto indices = detail::bidiff_indices(n, k);
    const GaussianRational base = detail::minus_two_i_power(k);
    detail::TermBuilder<PhaseMonomial, S> out;
    for (const auto& [ma, ca] : a.terms()) {
        for (const auto& [mb, cb] : b.terms()) {
            if (max_degree >= 0 && ma.degree() + mb.degree() - 2 * k > max_degree) continue;
            for (const auto& idx : indices) {
                // d_z^mu d_zbar^nu of a times d_zbar^mu d_z^nu of b.
                long f = idx.weight;
                PhaseMonomial m;
                bool vanishes = false;
                for (int i = 0; i < n && !vanishes; ++i) {
                    const int mu = idx.mu[static_cast<std::size_t>(i)];
                    const int nu = idx.nu[static_cast<std::size_t>(i)];
                    if (mu > ma.alpha(i) || nu > ma.beta(i) || mu > mb.beta(i) || nu > mb.alpha(i)) {
                        vanishes = true;
                        break;
                    }
                    f *= detail::falling(ma.alpha(i), mu) * detail::falling(ma.beta(i), nu) *
                         detail::falling(mb.beta(i), mu) * detail::falling(mb.alpha(i), nu);
                    m.set_alpha(i, ma.alpha(i) - mu + mb.alpha(i) - nu);
                    m.set_beta(i, ma.beta(i) - nu + mb.beta(i) - mu);
                }
                if (vanishes) continue;
                out[m].add_product(ca, cb, base * GaussianRational(f));
            }
        }
    }
    return out.template build<PhasePoly<S>>(n);
}

/// Coefficient of hbar^{2m} a Lambda^{2m+1} b in the symbol of (i/hbar)[A, B]:
/// (-1)^{m+1} / ((2m+1)! 4^m).
inline mpq_class moyal_coefficient(int m) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(2 * m + 1));
    mpz_class p4;
    mpz_ui_pow_ui(p4.get_mpz_t(), 4, static_cast<unsigned long>(m));
    mpq_class c(1, 1);
    c /= mpq_class(f * p4);
    return m % 2 == 0 ? mpq_class(-c) : c;
}

/// Symbol of (i/hbar)[A^W, B^W]: the Poisson bracket at hbar^0 and the odd
/// bidifferential terms at even powers of hbar.  Piece j is truncated at
/// total degree degree_cap.
template <class S>
SemiclassicalJet<S> moyal_bracket(const PhasePoly<S>& a, const PhasePoly<S>& b, int hbar_cap, int degree_cap) {
    if (a.dim() != b.dim()) throw ValidationError("moyal_bracket: dimension mismatch");
    SemiclassicalJet<S> out(a.dim(), degree_cap, hbar_cap);
    for (int m = 0; 2 * m <= hbar_cap; ++m) {
        PhasePoly<S> t = poisson_power(a, b, 2 * m + 1, degree_cap);
        const mpq_class c = moyal_coefficient(m);
        t.scale(GaussianRational(c));
        out[2 * m] = std::move(t);
    }
    return out;
}

/// Symbol of A^W B^W: sum_k (1/k!) (i hbar/2)^k a Lambda^k b.
template <class S>
SemiclassicalJet<S> star_product(const PhasePoly<S>& a, const PhasePoly<S>& b, int hbar_cap, int degree_cap) {
    if (a.dim() != b.dim()) throw ValidationError("star_product: dimension mismatch");
    SemiclassicalJet<S> out(a.dim(), degree_cap, hbar_cap);
    GaussianRational c(1);
    const GaussianRational half_i(mpq_class(0), mpq_class(1, 2));
    for (int k = 0; k <= hbar_cap; ++k) {
        if (k > 0) {
            c *= half_i;
            c /= mpq_class(k);
        }
        PhasePoly<S> t = poisson_power(a, b, k, degree_cap);
        t.scale(c);
        out[k] = std::move(t);
    }
    return out;
}

namespace detail {

/// ad_G(F) for graded symbols, the quantum commutator (i/hbar)[G, .].
/// Piece l is truncated at degree weight_cap - 2l.
template <class S>
SemiclassicalJet<S> graded_commutator(const SemiclassicalJet<S>& g, const SemiclassicalJet<S>& f) {
    SemiclassicalJet<S> out(f.n, f.degree_cap, f.hbar_cap);
    for (int j = 0; j <= g.hbar_cap; ++j) {
        if (g[j].is_zero()) continue;
        for (int i = 0; i + j <= f.hbar_cap; ++i) {
            if (f[i].is_zero()) continue;
            for (int m = 0; i + j + 2 * m <= f.hbar_cap; ++m) {
                const int l = i + j + 2 * m;
                const int cap = f.degree_limit(l);
                if (cap < 0) break;
                PhasePoly<S> t(f.n);
                if (m == 0) {
                    t = poisson_bracket(g[j], f[i], cap,
                                        approx_real_valued(g[j]) && approx_real_valued(f[i]));
                } else {
                    t = poisson_power(g[j], f[i], 2 * m + 1, cap);
                    t.scale(GaussianRational(moyal_coefficient(m)));
                }
                out[l] += t;
            }
        }
    }
    return out;
}

}  // namespace detail

/// exp(ad_G) F with ad_G the quantum commutator, i.e. the symbol of
/// e^{iG/hbar} F e^{-iG/hbar}.  Every weight of G must be >= 4 (degree plus
/// twice the hbar power), so each application raises the weight.
template <class S>
SemiclassicalJet<S> quantum_exp_ad(const SemiclassicalJet<S>& g, const SemiclassicalJet<S>& f) {
    for (int j = 0; j <= g.hbar_cap; ++j) {
        for (const auto& [m, c] : g[j].terms()) {
            if (m.degree() + 2 * j < 4) throw ValidationError("quantum_exp_ad: generator weight must be >= 4");
        }
    }
    SemiclassicalJet<S> result = f;
    for (int l = 0; l <= f.hbar_cap; ++l) result[l] = f[l].truncated(f.degree_limit(l));
    SemiclassicalJet<S> term = result;
    for (int k = 1;; ++k) {
        term = detail::graded_commutator(g, term);
        if (term.is_zero()) break;
        for (auto& p : term.pieces) p.scale(GaussianRational(mpq_class(1, k)));
        for (int l = 0; l <= f.hbar_cap; ++l) result[l] += term[l];
    }
    return result;
}

/// Weyl symbol of S^m for one degree of freedom, S = Op^W(x^2 + xi^2):
/// entry l is the coefficient of hbar^{2l} s^{m - 2l}.  Follows from
/// s^m * s = s^{m+1} - m^2 hbar^2 s^{m-1} for the star product.
inline std::vector<mpz_class> action_power_symbol(int m) {
    std::vector<mpz_class> c{mpz_class(1)};
    for (int p = 0; p < m; ++p) {
        std::vector<mpz_class> next(static_cast<std::size_t>(p + 1) / 2 + 1);
        for (std::size_t l = 0; l < c.size(); ++l) {
            next[l] += c[l];
            const long deg = p - 2 * static_cast<long>(l);
            if (deg >= 1) next[l + 1] -= c[l] * deg * deg;
        }
        while (next.size() > 1 && next.back() == 0) next.pop_back();
        c = std::move(next);
    }
    return c;
}

/// Rewrites a diagonal Weyl symbol sum_j hbar^j q_j(s) as sum_j hbar^j p_j(S).
template <class S>
std::vector<ActionPoly<S>> weyl_to_action_operator(const std::vector<ActionPoly<S>>& symbol) {
    if (symbol.empty()) return {};
    const int n = symbol.front().dim();
    const int hcap = static_cast<int>(symbol.size()) - 1;
    std::vector<ActionPoly<S>> residual = symbol;
    std::vector<ActionPoly<S>> out(symbol.size(), ActionPoly<S>(n));
    int top = 0;
    for (const auto& q : symbol) {
        for (const auto& [m, c] : q.terms()) top = std::max(top, m.degree());
    }
    for (int d = top; d >= 0; --d) {
        for (int j = 0; j <= hcap; ++j) {
            const auto layer = residual[static_cast<std::size_t>(j)].degree_part(d);
            for (const auto& [m, c] : layer.terms()) {
                out[static_cast<std::size_t>(j)].add_term(m, c);
                // Subtract c hbar^j (symbol of S^m - s^m), a product over coordinates.
                std::vector<std::pair<MultiIndex, std::pair<int, mpz_class>>> acc{{m, {0, mpz_class(1)}}};
                for (int i = 0; i < n; ++i) {
                    const auto table = action_power_symbol(m[i]);
                    std::vector<std::pair<MultiIndex, std::pair<int, mpz_class>>> next;
                    for (const auto& [mm, hw] : acc) {
                        for (std::size_t l = 0; l < table.size(); ++l) {
                            if (table[l] == 0) continue;
                            MultiIndex k = mm;
                            k.k[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(m[i] - 2 * static_cast<int>(l));
                            next.push_back({k, {hw.first + 2 * static_cast<int>(l), hw.second * table[l]}});
                        }
                    }
                    acc = std::move(next);
                }
                for (const auto& [k, hw] : acc) {
                    const int jj = j + hw.first;
                    if (hw.first == 0 || jj > hcap) continue;
                    S term = c;
                    ScalarTraits<S>::scale(term, GaussianRational(mpq_class(-hw.second)));
                    residual[static_cast<std::size_t>(jj)].add_term(k, term);
                }
            }
        }
    }
    return out;
}

/// Semiclassical Birkhoff normal form of the Weyl symbol
/// sum_i omega_i (x_i^2 + xi_i^2) + V(x), through total weight degree_cap
/// (degree in z plus twice the hbar power) and hbar powers <= hbar_cap.
/// p[0] coincides with the classical normal form.
template <class S, class T>
QuantumNormalForm<S> quantum_normal_form(const BasicPotentialJet<T>& jet, const Frequencies& w, int degree_cap,
                                         int hbar_cap) {
    if (degree_cap < 2 || degree_cap % 2 != 0) throw ValidationError("degree cap must be even and >= 2");
    if (hbar_cap < 0) throw ValidationError("hbar cap must be >= 0");
    const int order = degree_cap / 2;
    if (jet.max_half_degree() && order > *jet.max_half_degree()) {
        throw ValidationError("degree cap exceeds potential jet data");
    }
    const int n = w.dim();
    SemiclassicalJet<S> ham(n, degree_cap, hbar_cap);
    ham[0] = initial_hamiltonian<S>(jet, w, std::nullopt, std::max(order, 2)).truncated(degree_cap);

    std::vector<ActionPoly<S>> diag(static_cast<std::size_t>(hbar_cap + 1), ActionPoly<S>(n));
    for (int weight = 2; weight <= degree_cap; weight += 2) {
        SemiclassicalJet<S> gen(n, degree_cap, hbar_cap);
        for (int j = 0; j <= hbar_cap && 2 * j <= weight; ++j) {
            auto sol = solve_homological(ham[j].degree_part(weight - 2 * j), w);
            diag[static_cast<std::size_t>(j)] += sol.normal;
            gen[j] = std::move(sol.generator);
        }
        if (!gen.is_zero()) ham = quantum_exp_ad(gen, ham);
    }

    QuantumNormalForm<S> out{w, degree_cap, hbar_cap, weyl_to_action_operator(diag), diag};
    return out;
}

/// sum_j hbar^j p_j(s) at numeric frequencies.
template <class S>
double model_value(const std::vector<ActionPoly<S>>& p, std::span<const double> s, double hbar,
                   std::span<const double> omega) {
    if (!(hbar > 0.0)) throw ValidationError("hbar must be positive");
    if (p.empty()) return 0.0;
    const int n = p.front().dim();
    if (static_cast<int>(s.size()) != n) throw ValidationError("model_value: action vector has the wrong length");
    if constexpr (ScalarTraits<S>::exact) {
        if (static_cast<int>(omega.size()) != n) {
            throw ValidationError("model_eigenvalue: symbolic frequencies need numeric values");
        }
    }
    double total = 0.0;
    double hp = 1.0;
    for (const auto& pj : p) {
        total += hp * pj.evaluate(s, omega).real();
        hp *= hbar;
    }
    return total;
}

/// sum_j hbar^j p_j((2k+1) hbar) at numeric frequencies.
template <class S>
double model_eigenvalue(const std::vector<ActionPoly<S>>& p, const MultiIndex& k, double hbar,
                        std::span<const double> omega) {
    if (p.empty()) return 0.0;
    const int n = p.front().dim();
    std::vector<double> s(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = (2.0 * k[i] + 1.0) * hbar;
    return model_value(p, s, hbar, omega);
}

template <class S>
double model_eigenvalue(const QuantumNormalForm<S>& qnf, const MultiIndex& k, double hbar,
                        std::span<const double> omega = {}) {
    if (!qnf.omega.is_symbolic()) omega = qnf.omega.values();
    return model_eigenvalue(qnf.p, k, hbar, omega);
}

}  // namespace bnf
