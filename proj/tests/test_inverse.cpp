#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace bnf;
using E = ExactScalar;
using testing::Rng;

namespace {

MultiIndex idx(std::vector<int> v) { return MultiIndex::from(v); }

PhasePoly<E> potential_z(const PotentialJet& jet, int lo, int hi) { return real_to_complex(potential_real<E>(jet, lo, hi)); }

std::vector<ActionPoly<E>> prefix(const NormalForm<E>& nf, int order) {
    return {nf.H.begin(), nf.H.begin() + (order - 1)};
}

}  // namespace

TEST_CASE("diagonal weights") {
    CHECK(diagonal_weight(idx({2})) == mpq_class(3, 8));
    CHECK(diagonal_weight(idx({0, 0, 0})) == 1);
    CHECK(diagonal_weight(idx({1, 1})) == mpq_class(1, 4));
    // Independent: the |z|^{2k} coefficient of ((z + zbar)/2)^{2k} for k = 3 is 20/64.
    CHECK(diagonal_weight(idx({3})) == mpq_class(5, 16));
    CHECK(diagonal_weight(idx({2, 1})) == mpq_class(3, 16));
}

TEST_CASE("recovery from the quartic normal form") {
    ActionPoly<E> h2(1);
    h2.add_term(idx({2}), E(mpq_class(3, 8)));
    const std::vector<ActionPoly<E>> hs{h2};
    const auto jet = recover_potential<E>(std::span<const ActionPoly<E>>(hs), Frequencies::symbolic(1));
    CHECK(jet.terms().size() == 1);
    CHECK(jet.coeff(idx({2})) == 1);

    const std::vector<ActionPoly<E>> zeros(4, ActionPoly<E>(2));
    CHECK(recover_potential<E>(std::span<const ActionPoly<E>>(zeros), Frequencies::symbolic(2)).empty());
}

TEST_CASE("round trip with a metric in two dimensions") {
    const mpq_class a(-3, 11);
    const mpq_class c(7, 5);
    MetricJet metric(2, 4);
    metric.set(0, 0, idx({0, 1}), a);
    PotentialJet jet(2, 4);
    jet.set(idx({1, 1}), c);
    const auto nf = classical_bnf<E>(jet, Frequencies::symbolic(2), metric, 4);
    CHECK(recover_potential(nf, metric) == jet);
    // Without the metric the data is not that of any potential.
    CHECK_THROWS_AS(recover_potential(nf), InconsistentData);
}

TEST_CASE("artifact terms") {
    const auto w = Frequencies::symbolic(1);
    const auto h1 = harmonic_part<E>(w);
    const std::vector<PhasePoly<E>> none;
    CHECK(artifact_term<E>(none, h1, 2).is_zero());

    const std::vector<PhasePoly<E>> zero_gens(3, PhasePoly<E>(1));
    CHECK(artifact_term<E>(zero_gens, h1, 4).is_zero());

    PotentialJet jet(1, 3);
    jet.set(idx({2}), 1);
    jet.set(idx({3}), mpq_class(2, 9));
    const auto nf = classical_bnf<E>(jet, w, std::nullopt, 3);
    const std::vector<PhasePoly<E>> gens{nf.g(2)};
    const auto art = artifact_term<E>(gens, h1 + potential_z(jet, 2, 2), 3);
    CHECK_FALSE(art.is_zero());
    CHECK(art == nf.R_sharp[1]);
    // H_3 = diag(x^6 part) + diag(artifact).
    const auto diag = diagonal_part(art).coeff(idx({3}));
    CHECK(nf.h(3).coeff(idx({3})) == E(mpq_class(2, 9) * diagonal_weight(idx({3}))) + diag);
}

TEST_CASE("exact round trip on random jets (seed 31)") {
    Rng rng(31);
    for (int trial = 0; trial < 24; ++trial) {
        const int n = 1 + trial % 3;
        const int order = n == 3 ? 3 : 5;
        const auto jet = testing::random_jet(rng, n, order);
        std::optional<MetricJet> metric;
        if (trial % 2 == 1) metric = testing::random_metric(rng, n, order);
        const auto nf = classical_bnf<E>(jet, Frequencies::symbolic(n), metric, order);
        CHECK(recover_potential(nf, metric) == jet);
    }
}

TEST_CASE("degree locality (seed 32)") {
    Rng rng(32);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 1 + trial % 2;
        const auto jet = testing::random_jet(rng, n, 5, 0.7);
        const auto nf = classical_bnf<E>(jet, Frequencies::symbolic(n), std::nullopt, 5);
        const auto full = recover_potential(nf);
        for (int order = 2; order < 5; ++order) {
            const auto hs = prefix(nf, order);
            const auto part = recover_potential<E>(std::span<const ActionPoly<E>>(hs), Frequencies::symbolic(n));
            CHECK(part == full.restricted(order));
        }
    }
}

TEST_CASE("lowest single term enters with its diagonal weight (seed 33)") {
    Rng rng(33);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 1 + trial % 3;
        const auto ks = testing::exponent_vectors(n, 2, 4);
        const auto k = idx(ks[static_cast<std::size_t>(trial) % ks.size()]);
        const mpq_class c = testing::random_nonzero_rational(rng);
        PotentialJet jet(n, k.degree());
        jet.set(k, c);
        const auto nf = classical_bnf<E>(jet, Frequencies::symbolic(n), std::nullopt, k.degree());
        CHECK(nf.h(k.degree()).coeff(k) == E(c * diagonal_weight(k)));
        for (int i = 2; i < k.degree(); ++i) CHECK(nf.h(i).is_zero());
    }
}

TEST_CASE("float round trip (seed 34)") {
    Rng rng(34);
    const std::vector<double> omega{1.0, std::sqrt(2.0)};
    NumericPotentialJet jet(2, 4);
    for (const auto& k : testing::exponent_vectors(2, 2, 4)) jet.set(idx(k), testing::random_rational(rng).get_d());
    const auto nf = classical_bnf<Complex>(jet, Frequencies::numeric(omega), std::nullopt, 4);
    const auto back = recover_potential(nf);
    for (const auto& [k, c] : jet.terms()) CHECK(back.coeff(k) == doctest::Approx(c).epsilon(1e-9));
    CHECK(back.terms().size() == jet.terms().size());
}

TEST_CASE("inconsistent or malformed normal-form data") {
    const auto w = Frequencies::symbolic(1);
    ActionPoly<E> bad(1);
    bad.add_term(idx({2}), E(1));
    bad.add_term(idx({3}), E(1));
    const std::vector<ActionPoly<E>> a{bad};
    CHECK_THROWS_AS(recover_potential<E>(std::span<const ActionPoly<E>>(a), w), ValidationError);

    ActionPoly<E> dependent(1);
    dependent.add_term(idx({2}), E(1).div_linear_form(std::vector<int>{1}));
    const std::vector<ActionPoly<E>> b{dependent};
    CHECK_THROWS_AS(recover_potential<E>(std::span<const ActionPoly<E>>(b), w), InconsistentData);

    const std::vector<ActionPoly<E>> empty;
    CHECK_THROWS_AS(recover_potential<E>(std::span<const ActionPoly<E>>(empty), w), ValidationError);
}
