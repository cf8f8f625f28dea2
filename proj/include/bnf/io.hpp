#pragma once

// JSON documents for jets, polynomials and normal forms, and CSV for spectra.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bnf/inverse.hpp"
#include "bnf/quantum.hpp"
#include "bnf/spectral.hpp"

namespace bnf::io {

using json = nlohmann::json;

mpq_class parse_rational(const json& v);
std::vector<int> int_vector(const json& v, int n, const char* what);

// ---------------------------------------------------------------- scalars

/// Exact: {"re", "im", "den_int", "den_forms"} when the numerator is
/// frequency-free, else {"num": [{"w", "re", "im"}...], "den_int", "den_forms"}.
/// The value is numerator / (den_int * prod <m, omega>).
json scalar_to_json(const ExactScalar& c, int n);
/// Float: {"re": number, "im": number}.
json scalar_to_json(const Complex& c, int n);

ExactScalar exact_scalar_from_json(const json& v, int n);
Complex complex_scalar_from_json(const json& v);

template <class S>
S scalar_from_json(const json& v, int n) {
    if constexpr (ScalarTraits<S>::exact) {
        return exact_scalar_from_json(v, n);
    } else {
        (void)n;
        return complex_scalar_from_json(v);
    }
}

// ---------------------------------------------------------------- polynomials

template <class S>
json phase_poly_to_json(const PhasePoly<S>& p) {
    const int n = p.dim();
    json terms = json::array();
    for (const auto& [m, c] : p.terms()) {
        json t = scalar_to_json(c, n);
        t["alpha"] = m.alpha_index().to_vector(n);
        t["beta"] = m.beta_index().to_vector(n);
        terms.push_back(std::move(t));
    }
    return {{"n", n}, {"terms", std::move(terms)}};
}

template <class S>
PhasePoly<S> phase_poly_from_json(const json& v) {
    const int n = v.at("n").get<int>();
    PhasePoly<S> p(n);
    for (const auto& t : v.at("terms")) {
        const auto a = int_vector(t.at("alpha"), n, "alpha");
        const auto b = int_vector(t.at("beta"), n, "beta");
        p.add_term(PhaseMonomial::from(a, b), scalar_from_json<S>(t, n));
    }
    return p;
}

/// Action polynomials use the phase-space layout with alpha = beta.
template <class S>
json action_poly_to_json(const ActionPoly<S>& a) {
    return phase_poly_to_json(embed(a));
}

template <class S>
ActionPoly<S> action_poly_from_json(const json& v) {
    const PhasePoly<S> p = phase_poly_from_json<S>(v);
    if (!p.off_diagonal().is_zero()) throw ValidationError("action polynomial has a term with alpha != beta");
    return diagonal_part(p);
}

// ---------------------------------------------------------------- jets

json frequencies_to_json(const Frequencies& w);
Frequencies frequencies_from_json(const json& v, int n);

/// A potential/metric input file.  Coefficients given as "p/q" strings are
/// exact; plain numbers make the document float-only.
struct JetDocument {
    int n = 1;
    std::optional<int> max_half_degree;
    std::optional<PotentialJet> exact;  // absent when some coefficient is a float
    NumericPotentialJet numeric{1};
    std::optional<MetricJet> metric;
    Frequencies omega = Frequencies::symbolic(1);
};

JetDocument jet_from_json(const json& v);
json jet_to_json(const PotentialJet& jet, const std::optional<MetricJet>& metric, const Frequencies& w);
json jet_to_json(const NumericPotentialJet& jet, const Frequencies& w);

// ---------------------------------------------------------------- normal forms

template <class S>
json normal_form_to_json(const NormalForm<S>& nf) {
    json h = json::array();
    json g = json::array();
    json r = json::array();
    json rs = json::array();
    for (int i = 2; i <= nf.order; ++i) {
        const auto idx = static_cast<std::size_t>(i - 2);
        h.push_back({{"i", i}, {"poly", action_poly_to_json(nf.H[idx])}});
        g.push_back({{"i", i}, {"poly", phase_poly_to_json(nf.G[idx])}});
        r.push_back({{"i", i}, {"poly", phase_poly_to_json(nf.R[idx])}});
        rs.push_back({{"i", i}, {"poly", phase_poly_to_json(nf.R_sharp[idx])}});
    }
    return {{"n", nf.dim()},
            {"order", nf.order},
            {"mode", ScalarTraits<S>::exact ? "exact" : "float"},
            {"omega", frequencies_to_json(nf.omega)},
            {"H", std::move(h)},
            {"G", std::move(g)},
            {"audit", {{"R", std::move(r)}, {"R_sharp", std::move(rs)}}}};
}

template <class S>
struct NormalFormInput {
    Frequencies omega;
    std::vector<ActionPoly<S>> H;  // H_2..H_N
};

template <class S>
NormalFormInput<S> normal_form_from_json(const json& v) {
    const int n = v.at("n").get<int>();
    NormalFormInput<S> out{frequencies_from_json(v.at("omega"), n), {}};
    const int order = v.at("order").get<int>();
    out.H.assign(static_cast<std::size_t>(std::max(order - 1, 0)), ActionPoly<S>(n));
    for (const auto& block : v.at("H")) {
        const int i = block.at("i").get<int>();
        if (i < 2 || i > order) throw ValidationError("normal form block index out of range");
        out.H[static_cast<std::size_t>(i - 2)] = action_poly_from_json<S>(block.at("poly"));
    }
    return out;
}

/// {"n", "degree_cap", "hbar_cap", "mode", "omega", "p": [{"j", "terms": [{"m", "c"}]}]}
/// where c is a rational string, a number, or a structured exact scalar.
template <class S>
json quantum_normal_form_to_json(const QuantumNormalForm<S>& q) {
    const int n = q.dim();
    json blocks = json::array();
    for (std::size_t j = 0; j < q.p.size(); ++j) {
        json terms = json::array();
        for (const auto& [m, c] : q.p[j].terms()) {
            json cj;
            if constexpr (ScalarTraits<S>::exact) {
                if (auto r = c.as_rational()) {
                    cj = r->get_str();
                } else {
                    cj = scalar_to_json(c, n);
                }
            } else {
                cj = c.real();
            }
            terms.push_back({{"m", m.to_vector(n)}, {"c", std::move(cj)}});
        }
        blocks.push_back({{"j", j}, {"terms", std::move(terms)}});
    }
    return {{"n", n},
            {"degree_cap", q.degree_cap},
            {"hbar_cap", q.hbar_cap},
            {"mode", ScalarTraits<S>::exact ? "exact" : "float"},
            {"omega", frequencies_to_json(q.omega)},
            {"p", std::move(blocks)}};
}

/// Float p_j blocks from a qbnf document (exact entries are evaluated at `omega`).
std::vector<ActionPoly<Complex>> action_blocks_from_json(const json& v, std::span<const double> omega);

// ---------------------------------------------------------------- spectra

/// Rows "hbar,index,energy" with a header line.
void write_spectra_csv(std::ostream& os, const std::vector<SpectrumSample>& samples);
/// Groups rows by hbar (in file order); metadata fields stay at defaults.
std::vector<SpectrumSample> read_spectra_csv(std::istream& is, int dim);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace bnf::io
