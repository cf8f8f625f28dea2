#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "bnf/io.hpp"
#include "support.hpp"

using namespace bnf;
using E = ExactScalar;
using testing::Rng;
using json = io::json;

namespace {

MultiIndex idx(std::vector<int> v) { return MultiIndex::from(v); }

}  // namespace

TEST_CASE("rational parsing") {
    CHECK(io::parse_rational("3/8") == mpq_class(3, 8));
    CHECK(io::parse_rational("-6/4") == mpq_class(-3, 2));
    CHECK(io::parse_rational("7") == 7);
    CHECK_THROWS_AS(io::parse_rational("1/0"), ValidationError);
    CHECK_THROWS_AS(io::parse_rational("x"), ValidationError);
    CHECK_THROWS_AS(io::parse_rational(""), ValidationError);
    CHECK_THROWS_AS(io::parse_rational(0.5), ValidationError);
}

TEST_CASE("jet documents round trip (seed 71)") {
    Rng rng(71);
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 1 + trial % 3;
        const auto jet = testing::random_jet(rng, n, 4);
        std::optional<MetricJet> metric;
        if (trial % 2 == 1) metric = testing::random_metric(rng, n, 4);
        const auto text = io::jet_to_json(jet, metric, Frequencies::symbolic(n)).dump();
        const auto doc = io::jet_from_json(json::parse(text));
        REQUIRE(doc.exact.has_value());
        CHECK(*doc.exact == jet);
        CHECK(doc.metric.has_value() == metric.has_value());
        if (metric) CHECK(doc.metric->terms() == metric->terms());
        CHECK(doc.omega.is_symbolic());
        CHECK(doc.max_half_degree == 4);
        for (const auto& [k, c] : jet.terms()) CHECK(doc.numeric.coeff(k) == c.get_d());
    }
}

TEST_CASE("float coefficients make a jet float-only") {
    const auto doc = io::jet_from_json(json::parse(R"({
        "n": 2,
        "omega": {"mode": "numeric", "values": [1.0, 1.4142135623730951]},
        "potential": [{"k": [2, 0], "c": 0.25}, {"k": [1, 1], "c": "1/3"}]
    })"));
    CHECK_FALSE(doc.exact.has_value());
    CHECK(doc.numeric.coeff(idx({2, 0})) == 0.25);
    CHECK(doc.numeric.coeff(idx({1, 1})) == doctest::Approx(1.0 / 3.0));
    CHECK(doc.omega.values()[1] == std::sqrt(2.0));

    NumericPotentialJet nj(1);
    nj.set(idx({3}), -0.125);
    const auto back = io::jet_from_json(io::jet_to_json(nj, Frequencies::numeric({2.0})));
    CHECK(back.numeric.coeff(idx({3})) == -0.125);
}

TEST_CASE("malformed jet documents") {
    CHECK_THROWS_AS(io::jet_from_json(json::parse(R"({"n": 1, "potential": [{"k": [1, 1], "c": "1"}]})")),
                    ValidationError);
    CHECK_THROWS_AS(io::jet_from_json(json::parse(R"({"n": 1, "potential": [{"k": [2.5], "c": "1"}]})")),
                    ValidationError);
    CHECK_THROWS_AS(io::jet_from_json(json::parse(R"({"n": 1, "omega": {"mode": "weird"}})")), ValidationError);
    CHECK_THROWS_AS(io::jet_from_json(json::parse(R"({"n": 1, "omega": {"mode": "numeric", "values": [1, 2]}})")),
                    ValidationError);
    CHECK_THROWS_AS(io::jet_from_json(json::parse(R"({"n": 9})")), ValidationError);
    CHECK_THROWS(io::jet_from_json(json::parse(R"({"potential": []})")));
}

TEST_CASE("exact scalars with frequency numerators and denominators (seed 72)") {
    Rng rng(72);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial % 3;
        std::uniform_int_distribution<int> e(-2, 2);
        E x(GaussianRational(testing::random_rational(rng), testing::random_rational(rng)));
        std::vector<int> form(static_cast<std::size_t>(n));
        for (auto& f : form) f = e(rng);
        if (std::any_of(form.begin(), form.end(), [](int v) { return v != 0; })) x = x.div_linear_form(form);
        if (trial % 3 == 0) {
            std::vector<int> unit(static_cast<std::size_t>(n), 0);
            unit[0] = 1;
            x = x.mul_linear_form(unit) + E(GaussianRational(testing::random_rational(rng)));
        }
        const auto back = io::exact_scalar_from_json(json::parse(io::scalar_to_json(x, n).dump()), n);
        CHECK(back == x);
    }
}

TEST_CASE("phase polynomials and normal forms round trip") {
    Rng rng(73);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 1 + trial % 2;
        const auto p = testing::random_phase_poly(rng, n, 5, 6);
        CHECK(io::phase_poly_from_json<E>(io::phase_poly_to_json(p)) == p);
    }

    PotentialJet jet(2, 3);
    jet.set(idx({2, 0}), mpq_class(1, 3));
    jet.set(idx({1, 1}), -2);
    jet.set(idx({1, 2}), mpq_class(5, 7));
    const auto nf = classical_bnf<E>(jet, Frequencies::symbolic(2), std::nullopt, 3);
    const auto doc = io::normal_form_to_json(nf);
    CHECK(doc.at("mode") == "exact");
    CHECK(doc.at("H").size() == 2);
    CHECK(doc.at("audit").at("R").size() == 2);
    const auto back = io::normal_form_from_json<E>(json::parse(doc.dump()));
    REQUIRE(back.H.size() == nf.H.size());
    for (std::size_t i = 0; i < nf.H.size(); ++i) CHECK(back.H[i] == nf.H[i]);
    CHECK(recover_potential<E>(std::span<const ActionPoly<E>>(back.H), back.omega) == jet);

    json off = io::phase_poly_to_json(testing::random_phase_poly(rng, 1, 4, 1));
    off["terms"][0]["alpha"] = json::array({1});
    off["terms"][0]["beta"] = json::array({2});
    CHECK_THROWS_AS(io::action_poly_from_json<E>(off), ValidationError);
}

TEST_CASE("quantum normal form documents") {
    PotentialJet jet(1, 2);
    jet.set(idx({2}), 1);
    const auto q = quantum_normal_form<E>(jet, Frequencies::symbolic(1), 4, 2);
    const auto doc = io::quantum_normal_form_to_json(q);
    bool found = false;
    for (const auto& t : doc.at("p").at(0).at("terms")) {
        if (t.at("m") == json::array({2})) {
            CHECK(t.at("c") == "3/8");
            found = true;
        }
    }
    CHECK(found);
    const std::vector<double> w{1.0};
    const auto blocks = io::action_blocks_from_json(doc, w);
    REQUIRE(blocks.size() == 3);
    CHECK(blocks[0].coeff(idx({1})).real() == 1.0);
    CHECK(blocks[0].coeff(idx({2})).real() == 0.375);
    CHECK(blocks[2].coeff(idx({0})).real() == 0.375);
}

TEST_CASE("spectra CSV round trip (seed 74)") {
    Rng rng(74);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SpectrumSample> samples;
    for (double h : {0.2, 0.1, 0.05}) {
        SpectrumSample s;
        s.hbar = h;
        double e = 0.0;
        for (int k = 0; k < 7; ++k) s.energies.push_back(e += u(rng));
        samples.push_back(s);
    }
    std::ostringstream os;
    io::write_spectra_csv(os, samples);
    std::istringstream is(os.str());
    const auto back = io::read_spectra_csv(is, 1);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].hbar == samples[i].hbar);
        CHECK(back[i].energies == samples[i].energies);
    }

    std::istringstream bad("hbar,index,energy\n0.1,0,abc\n");
    CHECK_THROWS_AS(io::read_spectra_csv(bad, 1), ValidationError);
    std::istringstream unsorted("0.1,0,2\n0.1,1,1\n");
    CHECK_THROWS_AS(io::read_spectra_csv(unsorted, 1), ValidationError);
}

TEST_CASE("shortest decimal formatting round trips (seed 75)") {
    Rng rng(75);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int trial = 0; trial < 200; ++trial) {
        const double v = u(rng) * std::pow(10.0, trial % 7 - 3);
        CHECK(std::stod(io::format_double(v)) == v);
    }
    CHECK(io::format_double(0.1) == "0.1");
}
