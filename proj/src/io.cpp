#include "bnf/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace bnf::io {

mpq_class parse_rational(const json& v) {
    if (!v.is_string()) throw ValidationError("expected a rational string \"p/q\"");
    const auto s = v.get<std::string>();
    mpq_class q;
    if (s.empty() || q.set_str(s, 10) != 0 || sgn(q.get_den()) == 0) {
        throw ValidationError("malformed rational '" + s + "'");
    }
    q.canonicalize();
    return q;
}

std::vector<int> int_vector(const json& v, int n, const char* what) {
    if (!v.is_array() || static_cast<int>(v.size()) != n) {
        throw ValidationError(std::string(what) + " must be an array of length " + std::to_string(n));
    }
    std::vector<int> out;
    for (const auto& x : v) {
        if (!x.is_number_integer()) throw ValidationError(std::string(what) + " entries must be integers");
        out.push_back(x.get<int>());
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw IoError("cannot format number");
    return {buf, end};
}

// ---------------------------------------------------------------- scalars

json scalar_to_json(const ExactScalar& c, int n) {
    const ExactFraction f = c.canonical();
    json out;
    json forms = json::array();
    for (const auto& form : f.den) {
        std::vector<int> m(form.coeffs().begin(), form.coeffs().begin() + n);
        forms.push_back(m);
    }
    out["den_int"] = f.scale.get_den().get_str();
    out["den_forms"] = std::move(forms);
    const mpz_class top = f.scale.get_num();
    if (f.num.is_zero()) {
        out["re"] = "0";
        out["im"] = "0";
    } else if (f.num.is_constant()) {
        const auto& g = f.num.terms().front().second;
        out["re"] = mpz_class(top * g.re).get_str();
        out["im"] = mpz_class(top * g.im).get_str();
    } else {
        json num = json::array();
        for (const auto& [e, g] : f.num.terms()) {
            std::vector<int> w(e.begin(), e.begin() + n);
            num.push_back({{"w", w}, {"re", mpz_class(top * g.re).get_str()}, {"im", mpz_class(top * g.im).get_str()}});
        }
        out["num"] = std::move(num);
    }
    return out;
}

json scalar_to_json(const Complex& c, int) { return {{"re", c.real()}, {"im", c.imag()}}; }

ExactScalar exact_scalar_from_json(const json& v, int n) {
    auto gaussian = [](const json& t) {
        return GaussianRational(t.contains("re") ? parse_rational(t.at("re")) : mpq_class(0),
                                t.contains("im") ? parse_rational(t.at("im")) : mpq_class(0));
    };
    ExactScalar value;
    if (v.contains("num")) {
        for (const auto& t : v.at("num")) {
            const auto w = int_vector(t.at("w"), n, "w");
            ExactScalar term(gaussian(t));
            for (int i = 0; i < n; ++i) {
                if (w[static_cast<std::size_t>(i)] < 0) throw ValidationError("negative frequency exponent");
                std::vector<int> unit(static_cast<std::size_t>(n), 0);
                unit[static_cast<std::size_t>(i)] = 1;
                for (int p = 0; p < w[static_cast<std::size_t>(i)]; ++p) term = term.mul_linear_form(unit);
            }
            value += term;
        }
    } else {
        value = ExactScalar(gaussian(v));
    }
    if (v.contains("den_int")) {
        const mpq_class d = parse_rational(v.at("den_int"));
        if (sgn(d) == 0) throw ValidationError("den_int must be nonzero");
        value *= GaussianRational(mpq_class(1 / d));
    }
    if (v.contains("den_forms")) {
        for (const auto& f : v.at("den_forms")) value = value.div_linear_form(int_vector(f, n, "den_forms entry"));
    }
    return value;
}

Complex complex_scalar_from_json(const json& v) {
    auto num = [](const json& x) -> double {
        if (x.is_number()) return x.get<double>();
        return parse_rational(x).get_d();
    };
    double den = 1.0;
    if (v.contains("den_int")) den = num(v.at("den_int"));
    if (v.contains("den_forms") && !v.at("den_forms").empty()) {
        throw ValidationError("float scalars cannot carry symbolic denominators");
    }
    if (v.contains("num")) throw ValidationError("float scalars cannot depend on symbolic frequencies");
    return {(v.contains("re") ? num(v.at("re")) : 0.0) / den, (v.contains("im") ? num(v.at("im")) : 0.0) / den};
}

// ---------------------------------------------------------------- jets

json frequencies_to_json(const Frequencies& w) {
    if (w.is_symbolic()) return {{"mode", "symbolic"}};
    return {{"mode", "numeric"},
            {"values", std::vector<double>(w.values().begin(), w.values().end())},
            {"tol", w.resonance_tol()}};
}

Frequencies frequencies_from_json(const json& v, int n) {
    const auto mode = v.at("mode").get<std::string>();
    if (mode == "symbolic") return Frequencies::symbolic(n);
    if (mode != "numeric") throw ValidationError("omega.mode must be 'symbolic' or 'numeric'");
    auto values = v.at("values").get<std::vector<double>>();
    if (static_cast<int>(values.size()) != n) throw ValidationError("omega.values must have length n");
    return Frequencies::numeric(std::move(values), v.value("tol", 1e-9));
}

JetDocument jet_from_json(const json& v) {
    JetDocument doc;
    doc.n = v.at("n").get<int>();
    detail::check_dim(doc.n);
    if (v.contains("max_half_degree")) doc.max_half_degree = v.at("max_half_degree").get<int>();
    doc.omega = v.contains("omega") ? frequencies_from_json(v.at("omega"), doc.n) : Frequencies::symbolic(doc.n);
    PotentialJet exact(doc.n, doc.max_half_degree);
    doc.numeric = NumericPotentialJet(doc.n, doc.max_half_degree);
    bool all_exact = true;
    for (const auto& t : v.value("potential", json::array())) {
        const auto k = MultiIndex::from(int_vector(t.at("k"), doc.n, "k"));
        const auto& c = t.at("c");
        if (c.is_number()) {
            all_exact = false;
            doc.numeric.set(k, doc.numeric.coeff(k) + c.get<double>());
        } else {
            const mpq_class q = parse_rational(c);
            exact.set(k, exact.coeff(k) + q);
            doc.numeric.set(k, doc.numeric.coeff(k) + q.get_d());
        }
    }
    if (all_exact) doc.exact = std::move(exact);
    if (v.contains("metric") && !v.at("metric").empty()) {
        MetricJet m(doc.n, doc.max_half_degree);
        for (const auto& t : v.at("metric")) {
            const int i = t.at("i").get<int>();
            const int j = t.at("j").get<int>();
            const auto k = MultiIndex::from(int_vector(t.at("k"), doc.n, "k"));
            const mpq_class q = parse_rational(t.at("c"));
            m.set(i, j, k, m.coeff(i, j, k) + q);
        }
        doc.metric = std::move(m);
    }
    return doc;
}

json jet_to_json(const PotentialJet& jet, const std::optional<MetricJet>& metric, const Frequencies& w) {
    const int n = jet.dim();
    json pot = json::array();
    for (const auto& [k, c] : jet.terms()) pot.push_back({{"k", k.to_vector(n)}, {"c", c.get_str()}});
    json met = json::array();
    if (metric) {
        for (const auto& [key, c] : metric->terms()) {
            const auto& [i, j, k] = key;
            met.push_back({{"i", i}, {"j", j}, {"k", k.to_vector(n)}, {"c", c.get_str()}});
        }
    }
    json out{{"n", n}, {"potential", std::move(pot)}, {"metric", std::move(met)}, {"omega", frequencies_to_json(w)}};
    if (jet.max_half_degree()) out["max_half_degree"] = *jet.max_half_degree();
    return out;
}

json jet_to_json(const NumericPotentialJet& jet, const Frequencies& w) {
    const int n = jet.dim();
    json pot = json::array();
    for (const auto& [k, c] : jet.terms()) pot.push_back({{"k", k.to_vector(n)}, {"c", c}});
    json out{{"n", n}, {"potential", std::move(pot)}, {"metric", json::array()}, {"omega", frequencies_to_json(w)}};
    if (jet.max_half_degree()) out["max_half_degree"] = *jet.max_half_degree();
    return out;
}

std::vector<ActionPoly<Complex>> action_blocks_from_json(const json& v, std::span<const double> omega) {
    const int n = v.at("n").get<int>();
    std::vector<ActionPoly<Complex>> out;
    for (const auto& block : v.at("p")) {
        const auto j = block.at("j").get<std::size_t>();
        if (out.size() <= j) out.resize(j + 1, ActionPoly<Complex>(n));
        for (const auto& t : block.at("terms")) {
            const auto m = MultiIndex::from(int_vector(t.at("m"), n, "m"));
            const auto& c = t.at("c");
            Complex value;
            if (c.is_number()) {
                value = c.get<double>();
            } else if (c.is_string()) {
                value = parse_rational(c).get_d();
            } else {
                value = exact_scalar_from_json(c, n).evaluate(omega);
            }
            out[j].add_term(m, value);
        }
    }
    return out;
}

// ---------------------------------------------------------------- spectra

void write_spectra_csv(std::ostream& os, const std::vector<SpectrumSample>& samples) {
    os << "hbar,index,energy\n";
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < s.energies.size(); ++i) {
            os << format_double(s.hbar) << ',' << i << ',' << format_double(s.energies[i]) << '\n';
        }
    }
}

std::vector<SpectrumSample> read_spectra_csv(std::istream& is, int dim) {
    std::vector<SpectrumSample> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line.starts_with("hbar")) continue;
        std::istringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
            throw ValidationError("spectra CSV line " + std::to_string(lineno) + " is malformed");
        }
        double hbar = 0.0;
        double e = 0.0;
        try {
            hbar = std::stod(a);
            e = std::stod(c);
        } catch (const std::exception&) {
            throw ValidationError("spectra CSV line " + std::to_string(lineno) + " has a bad number");
        }
        if (out.empty() || out.back().hbar != hbar) {
            out.push_back({});
            out.back().hbar = hbar;
            out.back().dim = dim;
        }
        out.back().energies.push_back(e);
    }
    for (auto& s : out) {
        if (!std::is_sorted(s.energies.begin(), s.energies.end())) {
            throw ValidationError("spectra CSV energies must be ascending within each hbar");
        }
    }
    return out;
}

}  // namespace bnf::io
