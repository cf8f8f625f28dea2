#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "bnf/quantum.hpp"
#include "support.hpp"

using namespace bnf;
using E = ExactScalar;
using testing::Rng;
using Mat = Eigen::MatrixXcd;

namespace {

MultiIndex idx(std::vector<int> v) { return MultiIndex::from(v); }
PhaseMonomial mono(std::vector<int> a, std::vector<int> b) { return PhaseMonomial::from(a, b); }

// ---------------------------------------------------------------- matrix oracle

// Position and momentum (xi = -i hbar d/dx) on the first `dim` oscillator
// states of -hbar^2 d^2 + x^2.
struct Canonical {
    Mat x;
    Mat xi;
};

Canonical canonical(int dim, double hbar) {
    Mat a = Mat::Zero(dim, dim);
    for (int m = 0; m + 1 < dim; ++m) a(m, m + 1) = std::sqrt(static_cast<double>(m + 1));
    const double r = std::sqrt(hbar / 2.0);
    const Mat ad = a.adjoint();
    return {r * (a + ad), Complex(0.0, r) * (ad - a)};
}

Mat power(const Mat& m, int k) {
    Mat out = Mat::Identity(m.rows(), m.cols());
    for (int t = 0; t < k; ++t) out = out * m;
    return out;
}

double binom(int n, int k) {
    double r = 1.0;
    for (int t = 1; t <= k; ++t) r = r * (n - k + t) / t;
    return r;
}

// Weyl quantization of x^a xi^b in one degree of freedom:
// 2^{-a} sum_r binom(a, r) x^r xi^b x^{a-r}.
Mat weyl_monomial(const Canonical& c, int a, int b) {
    Mat out = Mat::Zero(c.x.rows(), c.x.cols());
    const Mat xb = power(c.xi, b);
    for (int r = 0; r <= a; ++r) out += binom(a, r) * power(c.x, r) * xb * power(c.x, a - r);
    return out / std::pow(2.0, a);
}

Mat weyl(const Canonical& c, const PhasePoly<E>& symbol) {
    Mat out = Mat::Zero(c.x.rows(), c.x.cols());
    const auto real = complex_to_real(symbol);
    for (const auto& [m, coef] : real.terms()) {
        out += coef.evaluate(std::vector<double>{1.0}) * weyl_monomial(c, m.alpha(0), m.beta(0));
    }
    return out;
}

PhasePoly<E> from_real(std::vector<std::tuple<int, int, mpq_class>> terms) {
    RealPoly<E> r(1);
    for (const auto& [a, b, q] : terms) r.add_term(mono({a}, {b}), E(q));
    return real_to_complex(r);
}

/// max |(i/hbar)[A, B] - Op(moyal symbol)| over the exact top-left block.
double commutator_gap(const PhasePoly<E>& a, const PhasePoly<E>& b, double hbar) {
    const int dim = 60;
    const int block = 30;
    const auto c = canonical(dim, hbar);
    const Mat qa = weyl(c, a);
    const Mat qb = weyl(c, b);
    const Mat lhs = Complex(0.0, 1.0 / hbar) * (qa * qb - qb * qa);
    const int cap = a.max_degree() + b.max_degree();
    const auto sym = moyal_bracket(a, b, cap, cap);
    Mat rhs = Mat::Zero(dim, dim);
    for (int j = 0; j <= cap; ++j) rhs += std::pow(hbar, j) * weyl(c, sym[j]);
    return (lhs - rhs).topLeftCorner(block, block).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("Moyal bracket of a quadratic symbol is the Poisson bracket") {
    const auto h = harmonic_part<E>(Frequencies::symbolic(2));
    Rng rng(41);
    const auto b = testing::random_phase_poly(rng, 2, 6, 6);
    const auto m = moyal_bracket(h, b, 4, 8);
    CHECK(m[0] == poisson_bracket(h, b));
    for (int j = 1; j <= 4; ++j) CHECK(m[j].is_zero());
    const auto self = moyal_bracket(b, b, 4, 8);
    for (int j = 0; j <= 4; ++j) CHECK(self[j].is_zero());
}

TEST_CASE("first bidifferential power is minus the bracket (seed 42)") {
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 1 + trial % 3;
        const auto a = testing::random_phase_poly(rng, n, 5, 4);
        const auto b = testing::random_phase_poly(rng, n, 5, 4);
        CHECK(poisson_power(a, b, 1) + poisson_bracket(a, b) == PhasePoly<E>(n));
        PhasePoly<E> prod = a * b;
        CHECK(poisson_power(a, b, 0) == prod);
    }
}

TEST_CASE("Moyal coefficients") {
    CHECK(moyal_coefficient(0) == -1);
    CHECK(moyal_coefficient(1) == mpq_class(1, 24));
    CHECK(moyal_coefficient(2) == mpq_class(-1, 1920));
}

TEST_CASE("x^4 against xi^4 matches the quantized commutator") {
    const auto a = from_real({{4, 0, 1}});
    const auto b = from_real({{0, 4, 1}});
    const auto m = moyal_bracket(a, b, 4, 8);
    CHECK_FALSE(m[2].is_zero());
    CHECK(m[2].max_degree() == 2);
    for (double hbar : {0.3, 1.0}) CHECK(commutator_gap(a, b, hbar) < 1e-8);
}

TEST_CASE("random real symbols match the quantized commutator (seed 43)") {
    Rng rng(43);
    for (int trial = 0; trial < 6; ++trial) {
        const auto a = real_to_complex(testing::random_real_poly(rng, 1, 6, 4));
        const auto b = real_to_complex(testing::random_real_poly(rng, 1, 6, 4));
        CHECK(commutator_gap(a, b, 0.7) < 1e-7);
    }
}

TEST_CASE("star product of s^m with s") {
    PhasePoly<E> s(1);
    s.add_term(mono({1}, {1}), E(1));
    for (int m = 1; m <= 5; ++m) {
        PhasePoly<E> sm(1);
        sm.add_term(mono({m}, {m}), E(1));
        const auto prod = star_product(sm, s, 4, 2 * m + 2);
        PhasePoly<E> next(1);
        next.add_term(mono({m + 1}, {m + 1}), E(1));
        CHECK(prod[0] == next);
        CHECK(prod[1].is_zero());
        PhasePoly<E> low(1);
        low.add_term(mono({m - 1}, {m - 1}), E(static_cast<long>(-m * m)));
        CHECK(prod[2] == low);
    }
}

TEST_CASE("action power symbols against the generic star product and the spectrum") {
    PhasePoly<E> s(1);
    s.add_term(mono({1}, {1}), E(1));
    // Iterated star product s * s * ... * s.
    std::vector<PhasePoly<E>> acc{s};
    for (int m = 2; m <= 6; ++m) {
        std::vector<PhasePoly<E>> next(acc.size() + 2, PhasePoly<E>(1));
        for (std::size_t j = 0; j < acc.size(); ++j) {
            const auto p = star_product(acc[j], s, 2, 2 * m + 2);
            for (int l = 0; l <= 2; ++l) next[j + static_cast<std::size_t>(l)] += p[l];
        }
        acc = next;
        const auto sym = action_power_symbol(m);
        for (std::size_t j = 0; j < acc.size(); ++j) {
            PhasePoly<E> expect(1);
            if (j % 2 == 0 && j / 2 < sym.size()) {
                const int d = m - static_cast<int>(j);
                expect.add_term(mono({d}, {d}), E(mpq_class(sym[j / 2])));
            }
            CHECK(acc[j] == expect);
        }
    }
    CHECK(action_power_symbol(2) == std::vector<mpz_class>{1, -1});

    // Op^W of the symbol of S^m is diagonal with entries ((2k+1) hbar)^m.
    const double hbar = 0.4;
    const auto c = canonical(40, hbar);
    for (int m = 1; m <= 4; ++m) {
        const auto sym = action_power_symbol(m);
        Mat op = Mat::Zero(40, 40);
        for (std::size_t l = 0; l < sym.size(); ++l) {
            PhasePoly<E> t(1);
            const int d = m - 2 * static_cast<int>(l);
            t.add_term(mono({d}, {d}), E(mpq_class(sym[l])));
            op += std::pow(hbar, 2.0 * static_cast<double>(l)) * weyl(c, t);
        }
        for (int k = 0; k < 15; ++k) {
            CHECK(std::abs(op(k, k) - std::pow((2 * k + 1) * hbar, m)) < 1e-9);
            if (k + 2 < 15) CHECK(std::abs(op(k, k + 2)) < 1e-9);
        }
    }
}

TEST_CASE("harmonic oscillator is its own normal form") {
    for (int n = 1; n <= 2; ++n) {
        const auto q = quantum_normal_form<E>(PotentialJet(n), Frequencies::symbolic(n), 6, 2);
        CHECK(embed(q.p[0]) == harmonic_part<E>(Frequencies::symbolic(n)));
        CHECK(q.p[1].is_zero());
        CHECK(q.p[2].is_zero());
    }
}

TEST_CASE("quartic semiclassical normal form") {
    PotentialJet jet(1, 4);
    jet.set(idx({2}), 1);
    const auto q = quantum_normal_form<E>(jet, Frequencies::symbolic(1), 6, 2);
    const std::vector<double> one{1.0};
    CHECK(q.p[0].coeff(idx({2})) == E(mpq_class(3, 8)));
    CHECK(q.p[1].is_zero());
    CHECK(q.p[2].coeff(idx({0})) == E(mpq_class(3, 8)));
    CHECK(q.p[0].coeff(idx({1})).evaluate(one).real() == doctest::Approx(1.0));

    // At hbar = 1 each weight-w part contributes its own order, so the model
    // reproduces the first two perturbation orders exactly.
    for (int k = 0; k <= 5; ++k) {
        const auto [first, second] = testing::quartic_rs(k);
        CHECK(model_eigenvalue(q, idx({k}), 1.0, one) == doctest::Approx(2 * k + 1 + first + second).epsilon(1e-12));
    }
    const auto q4 = quantum_normal_form<E>(jet, Frequencies::symbolic(1), 4, 2);
    CHECK(model_eigenvalue(q4, idx({0}), 0.1, one) == doctest::Approx(0.1075).epsilon(1e-14));
    CHECK(model_eigenvalue(q4, idx({2}), 1.0, one) == doctest::Approx(5 + testing::quartic_rs(2).first));

    NumericPotentialJet fjet(1, 4);
    fjet.set(idx({2}), 1.0);
    const auto qf = quantum_normal_form<Complex>(fjet, Frequencies::numeric({1.0}), 6, 2);
    CHECK(std::abs(qf.p[0].coeff(idx({2})) - 0.375) < 1e-12);
    CHECK(std::abs(qf.p[2].coeff(idx({0})) - 0.375) < 1e-12);
    CHECK(std::abs(qf.p[0].coeff(idx({3})) + 17.0 / 64.0) < 1e-12);
}

TEST_CASE("model eigenvalues of the harmonic oscillator") {
    const auto q = quantum_normal_form<Complex>(NumericPotentialJet(1), Frequencies::numeric({1.0}), 4, 2);
    CHECK(model_eigenvalue(q, idx({3}), 0.1) == doctest::Approx(0.7));
    const auto q2 = quantum_normal_form<Complex>(NumericPotentialJet(2), Frequencies::numeric({1.0, std::sqrt(2.0)}), 4, 2);
    const double slope = 1.0 + std::sqrt(2.0);
    for (double h : {1e-2, 1e-4}) CHECK(model_eigenvalue(q2, idx({0, 0}), h) / h == doctest::Approx(slope));
    CHECK_THROWS_AS(model_eigenvalue(q, idx({0}), 0.0), ValidationError);
}

TEST_CASE("classical limit and vanishing odd orders (seed 44)") {
    Rng rng(44);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 1 + trial % 2;
        const int cap = n == 1 ? 10 : 8;
        const auto jet = testing::random_jet(rng, n, cap / 2, 0.6);
        const auto w = Frequencies::symbolic(n);
        const auto q = quantum_normal_form<E>(jet, w, cap, 3);
        const auto nf = classical_bnf<E>(jet, w, std::nullopt, cap / 2);
        CHECK(embed(q.p[0]) == normal_form_hamiltonian(nf));
        CHECK(q.p[1].is_zero());
        CHECK(q.p[3].is_zero());
        for (const auto& p : q.p) CHECK(embed(p).is_real_valued());
    }
}

TEST_CASE("Weyl symbol and operator form agree (seed 45)") {
    Rng rng(45);
    const auto jet = testing::random_jet(rng, 1, 4, 1.0);
    const auto q = quantum_normal_form<E>(jet, Frequencies::symbolic(1), 8, 4);
    // Re-expand sum_j hbar^j p_j(S) as a Weyl symbol.
    std::vector<ActionPoly<E>> back(q.p.size(), ActionPoly<E>(1));
    for (std::size_t j = 0; j < q.p.size(); ++j) {
        for (const auto& [m, c] : q.p[j].terms()) {
            const auto sym = action_power_symbol(m[0]);
            for (std::size_t l = 0; l < sym.size() && j + 2 * l < back.size(); ++l) {
                back[j + 2 * l].add_term(idx({m[0] - 2 * static_cast<int>(l)}), c * E(mpq_class(sym[l])));
            }
        }
    }
    for (std::size_t j = 0; j < back.size(); ++j) CHECK(back[j] == q.weyl_symbol[j]);
}

TEST_CASE("cap and generator checks") {
    PotentialJet jet(1, 4);
    jet.set(idx({2}), 1);
    CHECK_THROWS_AS(quantum_normal_form<E>(jet, Frequencies::symbolic(1), 5, 2), ValidationError);
    CHECK_THROWS_AS(quantum_normal_form<E>(jet, Frequencies::symbolic(1), 6, -1), ValidationError);
    SemiclassicalJet<E> g(1, 6, 2);
    g[0] = harmonic_part<E>(Frequencies::symbolic(1));
    SemiclassicalJet<E> f(1, 6, 2);
    CHECK_THROWS_AS(quantum_exp_ad(g, f), ValidationError);
}
