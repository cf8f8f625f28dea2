#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "bnf/spectral.hpp"
#include "bnf/trace.hpp"
#include "support.hpp"

using namespace bnf;
using testing::Rng;

namespace {

MultiIndex idx(std::vector<int> v) { return MultiIndex::from(v); }

std::vector<ActionPoly<Complex>> linear_model(std::vector<double> omega) {
    const int n = static_cast<int>(omega.size());
    std::vector<ActionPoly<Complex>> p(1, ActionPoly<Complex>(n));
    for (int i = 0; i < n; ++i) p[0].add_term(MultiIndex::unit(i), Complex(omega[static_cast<std::size_t>(i)]));
    return p;
}

std::vector<double> harmonic_levels(double hbar, int count) {
    std::vector<double> out;
    for (int k = 0; k < count; ++k) out.push_back((2 * k + 1) * hbar);
    return out;
}

Complex closed_form_1d(double t) { return 1.0 / Complex(0.0, 2.0 * std::sin(t)); }

}  // namespace

TEST_CASE("bump function") {
    CHECK(bump(-3.0) == 1.0);
    CHECK(bump(0.5) == 1.0);
    CHECK(bump(1.0) == 0.0);
    CHECK(bump(7.0) == 0.0);
    CHECK(bump(0.75) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(bump(0.5 + 1e-9) == 1.0);
    CHECK(bump(0.99) < 1e-40);
}

TEST_CASE("bump properties (seed 61)") {
    Rng rng(61);
    std::uniform_real_distribution<double> u(0.4, 1.1);
    for (int trial = 0; trial < 500; ++trial) {
        const double a = u(rng);
        const double b = u(rng);
        const double lo = std::min(a, b);
        const double hi = std::max(a, b);
        CHECK(bump(lo) >= bump(hi));
        CHECK(bump(a) >= 0.0);
        CHECK(bump(a) <= 1.0);
        // The gluing is symmetric about 3/4.
        CHECK(bump(a) + bump(1.5 - a) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("trace at t = 0 counts the levels") {
    const auto e = harmonic_levels(0.01, 30);
    const Complex tr = trace_spectrum(e, 0.01, 0.0, 0.5);
    double direct = 0.0;
    for (double x : e) direct += bump(x / 0.5);
    CHECK(tr.imag() == 0.0);
    CHECK(tr.real() == doctest::Approx(direct).epsilon(1e-14));
    CHECK(tr.real() > 0.0);
    CHECK(tr.real() <= 25.0);
}

TEST_CASE("conjugation symmetry (seed 62)") {
    Rng rng(62);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> e;
        double x = 0.0;
        for (int k = 0; k < 40; ++k) e.push_back(x += 0.05 * u(rng));
        const double t = 3.0 * u(rng);
        const double hbar = 0.005 + 0.05 * u(rng);
        const Complex plus = trace_spectrum(e, hbar, t, 0.7);
        const Complex minus = trace_spectrum(e, hbar, -t, 0.7);
        CHECK(std::abs(minus - std::conj(plus)) < 1e-12);
    }
    const auto p = linear_model({1.0, std::sqrt(2.0)});
    const std::vector<double> w{1.0, std::sqrt(2.0)};
    CHECK(std::abs(trace_model(p, w, -0.7, 0.01, 0.5) - std::conj(trace_model(p, w, 0.7, 0.01, 0.5))) < 1e-12);
}

TEST_CASE("model and spectrum traces of the harmonic oscillator") {
    const std::vector<double> w{1.0};
    const auto p = linear_model(w);
    const Complex model = trace_model(p, w, 0.7, 0.01, 0.5);
    CHECK(std::abs(trace_spectrum(harmonic_levels(0.01, 30), 0.01, 0.7, 0.5) - model) < 1e-9);

    // Direct truncated geometric series.
    Complex direct = 0.0;
    for (int k = 0; (2 * k + 1) * 0.01 < 0.5; ++k) {
        direct += bump((2 * k + 1) * 0.01 / 0.5) * std::exp(Complex(0.0, -0.7 * (2 * k + 1)));
    }
    CHECK(std::abs(model - direct) < 1e-12);

    // Computed spectrum: the phase error of each level is t dE / hbar, with dE
    // the stencil error -h^2 (6k^2 + 6k + 3) / 48.
    EigensolveOptions opt;
    opt.box_halfwidth = 1.5;
    opt.grid_points = 20000;
    opt.count = 30;
    opt.refine = false;
    const auto s = eigensolve(Potential::builtin("harmonic1d"), 0.01, opt);
    const double h = 3.0 / 20001.0;
    std::vector<double> corrected;
    for (int k = 0; k < 30; ++k) corrected.push_back((2 * k + 1) * 0.01 - h * h * (6.0 * k * k + 6.0 * k + 3.0) / 48.0);
    CHECK(std::abs(trace_spectrum(s.energies, 0.01, 0.7, 0.5) - trace_spectrum(corrected, 0.01, 0.7, 0.5)) < 1e-6);
    CHECK(std::abs(trace_spectrum(s.energies, 0.01, 0.7, 0.5) - model) < 5e-4);

    CHECK_THROWS_AS(trace_spectrum(harmonic_levels(0.01, 10), 0.01, 0.7, 0.5), ValidationError);
}

TEST_CASE("harmonic leading coefficient") {
    const std::vector<double> one{1.0};
    const Complex a = harmonic_leading(one, std::numbers::pi / 2);
    CHECK(a.real() == doctest::Approx(0.0));
    CHECK(a.imag() == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK_THROWS_AS(harmonic_leading(one, std::numbers::pi), ResonantTime);
    const std::vector<double> two{1.0, std::sqrt(2.0)};
    const double mag = 1.0 / (4.0 * std::sin(0.7) * std::sin(0.7 * std::sqrt(2.0)));
    CHECK(std::abs(harmonic_leading(two, 0.7)) == doctest::Approx(mag).epsilon(1e-14));
    CHECK(mag == doctest::Approx(0.465).epsilon(2e-3));
    CHECK(std::abs(harmonic_leading(two, 0.7) - closed_form_1d(0.7) * closed_form_1d(0.7 * std::sqrt(2.0))) < 1e-15);
}

TEST_CASE("harmonic model trace approaches the closed form") {
    const std::vector<double> w{1.0};
    const auto p = linear_model(w);
    const Complex exact = closed_form_1d(0.7);
    CHECK(std::abs(exact) == doctest::Approx(0.7761).epsilon(1e-4));
    const double e1 = std::abs(trace_model(p, w, 0.7, 0.005, 0.5) - exact);
    const double e2 = std::abs(trace_model(p, w, 0.7, 0.0025, 0.5) - exact);
    CHECK(e2 < 1e-5);
    CHECK(e1 / e2 > 8.0);
}

TEST_CASE("cutoff insensitivity") {
    const std::vector<double> w{1.0};
    const auto p = linear_model(w);
    auto gap = [&](double hbar) {
        return std::abs(trace_model(p, w, 0.7, hbar, 0.3) - trace_model(p, w, 0.7, hbar, 0.7));
    };
    const double g1 = gap(0.005);
    const double g2 = gap(0.0025);
    CHECK(g2 < g1 / 8.0);
}

TEST_CASE("trace model guards") {
    const std::vector<double> w{1.0};
    auto p = linear_model(w);
    CHECK_THROWS_AS(trace_model(p, w, 0.7, -0.01, 0.5), ValidationError);
    CHECK_THROWS_AS(trace_model(p, std::vector<double>{1.0, 2.0}, 0.7, 0.01, 0.5), ValidationError);
    CHECK_THROWS_AS(trace_model(p, std::vector<double>{-1.0}, 0.7, 0.01, 0.5), MathError);
    // A strongly negative s^2 term pulls outer lattice points back below eps.
    p[0].add_term(idx({2}), Complex(-2.0));
    CHECK_THROWS_AS(trace_model(p, w, 0.7, 0.01, 0.5), MathError);
}

TEST_CASE("expansion fit") {
    const Complex c(0.3, -1.2);
    std::vector<std::pair<double, Complex>> constant;
    for (double h : {0.04, 0.02, 0.01, 0.005}) constant.emplace_back(h, c);
    const auto f = fit_expansion(constant, 2);
    REQUIRE(f.a.size() == 3);
    CHECK(std::abs(f.a[0] - c) < 1e-12);
    CHECK(std::abs(f.a[1]) < 1e-9);
    CHECK(std::abs(f.a[2]) < 1e-7);
    for (const auto& r : f.residuals) CHECK(std::abs(r) < 1e-12);

    auto bad = constant;
    bad[1].first = 0.0395;
    CHECK_THROWS_AS(fit_expansion(bad, 2), ValidationError);
    CHECK_THROWS_AS(fit_expansion(constant, 3), ValidationError);
    CHECK_THROWS_AS(fit_expansion(constant, -1), ValidationError);
}

TEST_CASE("expansion fit recovers random polynomials (seed 63)") {
    Rng rng(63);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int L = 1 + trial % 3;
        std::vector<Complex> a;
        for (int l = 0; l <= L; ++l) a.emplace_back(u(rng), u(rng));
        std::vector<std::pair<double, Complex>> data;
        for (double h = 0.1; data.size() < static_cast<std::size_t>(L + 3); h /= 2.0) {
            Complex v = 0.0;
            for (int l = L; l >= 0; --l) v = v * h + a[static_cast<std::size_t>(l)];
            data.emplace_back(h, v);
        }
        const auto f = fit_expansion(data, L);
        for (int l = 0; l <= L; ++l) {
            CHECK(std::abs(f.a[static_cast<std::size_t>(l)] - a[static_cast<std::size_t>(l)]) <
                  1e-8 * std::pow(10.0, l));
        }
    }
}

TEST_CASE("harmonic traces extrapolate to the leading coefficient") {
    const std::vector<double> w{1.0};
    const auto p = linear_model(w);
    std::vector<std::pair<double, Complex>> data;
    for (double h : {0.0016, 0.00128, 0.001024, 0.0008192}) data.emplace_back(h, trace_model(p, w, 0.7, h, 0.5));
    const auto f = fit_expansion(data, 2);
    CHECK(std::abs(f.a[0] - harmonic_leading(w, 0.7)) < 1e-6);
}
