// Command-line front end: normal forms, inversion, spectra, fits and traces.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <random>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>

#include "bnf/io.hpp"
#include "bnf/trace.hpp"

namespace fs = std::filesystem;
using bnf::io::json;

namespace {

enum Exit { kOk = 0, kValidation = 2, kMath = 3, kIo = 4 };

// ---------------------------------------------------------------- files

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw bnf::IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    if (f.bad()) throw bnf::IoError("cannot read '" + path + "'");
    return ss.str();
}

json read_json(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw bnf::ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

/// Writes to a sibling temporary file and renames it over the target.
void write_atomic(const std::string& path, const std::string& content) {
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp-" + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw bnf::IoError("cannot write '" + tmp.string() + "'");
        f << content;
        f.flush();
        if (!f) {
            f.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw bnf::IoError("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw bnf::IoError("cannot move output into '" + path + "'");
    }
}

// ---------------------------------------------------------------- config

struct Common {
    std::string out;
    std::string report;
    std::uint64_t seed = 0;
    int workers = 1;
};

int env_int(const char* name, int fallback) {
    const char* v = std::getenv(name);
    if (!v || !*v) return fallback;
    try {
        return std::stoi(v);
    } catch (const std::exception&) {
        throw bnf::ValidationError(std::string(name) + " must be an integer");
    }
}

double env_double(const char* name, double fallback) {
    const char* v = std::getenv(name);
    if (!v || !*v) return fallback;
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw bnf::ValidationError(std::string(name) + " must be a number");
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class Timer {
public:
    void lap(const std::string& name) {
        timings_[name] = seconds_since(t0_);
        t0_ = std::chrono::steady_clock::now();
    }
    const json& timings() const { return timings_; }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
    json timings_ = json::object();
};

/// Jet file with an environment default for the numeric resonance tolerance.
bnf::io::JetDocument load_jet(const std::string& path) {
    json v = read_json(path);
    if (v.contains("omega") && v["omega"].value("mode", "") == "numeric" && !v["omega"].contains("tol")) {
        v["omega"]["tol"] = env_double("BNF_RESONANCE_TOL", 1e-9);
    }
    return bnf::io::jet_from_json(v);
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw bnf::ValidationError(std::string(what) + " must be positive");
}

/// Potential for the numerical verbs: a builtin name or a jet file with
/// numeric frequencies (quadratic part sum omega_i^2 x_i^2).
bnf::Potential load_potential(const std::string& name, const std::string& in) {
    if (!name.empty() && !in.empty()) throw bnf::ValidationError("give either --potential or --in, not both");
    if (!name.empty()) return bnf::Potential::builtin(name);
    if (in.empty()) throw bnf::ValidationError("a potential is required (--potential NAME or --in jet.json)");
    auto doc = load_jet(in);
    if (doc.omega.is_symbolic()) throw bnf::ValidationError("numerical verbs need numeric omega in the jet file");
    if (doc.metric) throw bnf::ValidationError("numerical verbs do not support metric perturbations");
    std::vector<double> u;
    for (double w : doc.omega.values()) u.push_back(w * w);
    return bnf::Potential::polynomial(u, doc.numeric, fs::path(in).stem().string());
}

std::vector<double> frequencies_of(const bnf::Potential& v) {
    if (!v.hessian()) throw bnf::ValidationError("potential has no known quadratic part");
    std::vector<double> w;
    for (double u : *v.hessian()) w.push_back(std::sqrt(u));
    return w;
}

template <class F>
auto run_parallel(std::size_t jobs, int workers, F f) {
    using R = decltype(f(std::size_t{0}));
    std::vector<R> out;
    out.reserve(jobs);
    const auto batch = static_cast<std::size_t>(std::max(workers, 1));
    for (std::size_t start = 0; start < jobs; start += batch) {
        std::vector<std::future<R>> futs;
        for (std::size_t i = start; i < std::min(jobs, start + batch); ++i) {
            futs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, f, i));
        }
        for (auto& fu : futs) out.push_back(fu.get());
    }
    return out;
}

// ---------------------------------------------------------------- spectra helpers

struct SolveConfig {
    std::vector<double> hbars;
    int count = 10;
    int grid = 20000;
    double box = 0.0;  // 0: chosen from the potential
    double refine_tol = 0.0;  // 0: 1e-6, or a fraction of hbar for counting
    bool no_refine = false;
};

void add_solve_options(CLI::App* cmd, SolveConfig& c, bool need_hbar_list) {
    auto* h = cmd->add_option("--hbar", c.hbars, "hbar values")->delimiter(',');
    if (need_hbar_list) h->required();
    cmd->add_option("--count", c.count, "eigenvalues per hbar");
    cmd->add_option("--grid", c.grid, "interior grid points per axis");
    cmd->add_option("--box", c.box, "box half-width (default: V >= 4E on the axes)");
    cmd->add_option("--refine-tol", c.refine_tol, "maximal drift under grid doubling");
    cmd->add_flag("--no-refine", c.no_refine, "skip the grid-doubling check");
}

double auto_box(const bnf::Potential& v, double top_energy) { return bnf::default_box(v, top_energy); }

bnf::SpectrumSample solve_one(const bnf::Potential& v, double hbar, const SolveConfig& c, int count) {
    require_positive(hbar, "hbar");
    bnf::EigensolveOptions o;
    o.count = count;
    o.grid_points = c.grid;
    o.refine = !c.no_refine;
    o.refinement_tol = c.refine_tol > 0.0 ? c.refine_tol : 1e-6;
    double wmax = 1.0;
    if (v.hessian()) {
        for (double u : *v.hessian()) wmax = std::max(wmax, std::sqrt(u));
    }
    o.box_halfwidth = c.box > 0.0 ? c.box : auto_box(v, (2.0 * count + 1.0) * hbar * wmax);
    return bnf::eigensolve(v, hbar, o);
}

/// Solves until the spectrum passes `energy`, doubling the count.
bnf::SpectrumSample solve_past(const bnf::Potential& v, double hbar, const SolveConfig& c, double energy) {
    int count = std::max(c.count, 4);
    for (;;) {
        SolveConfig cc = c;
        if (cc.box <= 0.0) cc.box = auto_box(v, energy);
        auto s = solve_one(v, hbar, cc, count);
        if (s.energies.back() > energy) return s;
        count *= 2;
    }
}

json sample_meta(const bnf::SpectrumSample& s) {
    return {{"hbar", s.hbar},
            {"levels", s.energies.size()},
            {"grid_points", s.grid_points},
            {"box_halfwidth", s.box_halfwidth},
            {"refinement_drift", std::isnan(s.refinement_drift) ? json(nullptr) : json(s.refinement_drift)}};
}

// ---------------------------------------------------------------- random jets

bnf::PotentialJet random_jet(std::mt19937_64& rng, int n, int max_half) {
    std::uniform_int_distribution<int> num(-100, 100);
    std::uniform_int_distribution<int> den(1, 100);
    std::bernoulli_distribution keep(0.5);
    bnf::PotentialJet jet(n, max_half);
    std::vector<int> k(static_cast<std::size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int axis, int left) {
        if (axis == n) {
            int d = 0;
            for (int v : k) d += v;
            if (d >= 2 && keep(rng)) jet.set(bnf::MultiIndex::from(k), mpq_class(num(rng), den(rng)));
            return;
        }
        for (int v = 0; v <= left; ++v) {
            k[static_cast<std::size_t>(axis)] = v;
            rec(axis + 1, left - v);
        }
        k[static_cast<std::size_t>(axis)] = 0;
    };
    rec(0, max_half);
    return jet;
}

// ---------------------------------------------------------------- verbs

struct Outcome {
    std::string summary;
    json report = json::object();
};

bool is_exact_mode(const std::string& mode) {
    if (mode == "exact") return true;
    if (mode == "float") return false;
    throw bnf::ValidationError("--mode must be 'exact' or 'float'");
}

void check_mode_frequencies(bool exact, const bnf::Frequencies& w) {
    if (exact && !w.is_symbolic()) throw bnf::ValidationError("exact mode needs symbolic omega in the jet file");
    if (!exact && w.is_symbolic()) throw bnf::ValidationError("float mode needs numeric omega in the jet file");
}

const bnf::PotentialJet& exact_jet(const bnf::io::JetDocument& doc) {
    if (!doc.exact) throw bnf::ValidationError("exact mode needs rational \"p/q\" coefficients");
    return *doc.exact;
}

template <class S>
json homological_report(const bnf::NormalForm<S>& nf) {
    std::size_t worst = 0;
    for (int i = 2; i <= nf.order; ++i) worst = std::max(worst, bnf::homological_residual(nf, i).size());
    return worst;
}

Outcome verb_bnf(const std::string& in, int order, const std::string& mode, bool verify, const Common& c) {
    Timer timer;
    const auto doc = load_jet(in);
    const bool exact = is_exact_mode(mode);
    check_mode_frequencies(exact, doc.omega);
    timer.lap("read_s");
    json out;
    json report;
    if (exact) {
        auto nf = bnf::classical_bnf<bnf::ExactScalar>(exact_jet(doc), doc.omega, doc.metric, order);
        timer.lap("normal_form_s");
        out = bnf::io::normal_form_to_json(nf);
        if (verify) {
            report["conjugation_residual_terms"] = bnf::verify_conjugation(nf, exact_jet(doc), doc.metric).size();
            report["homological_residual_terms"] = homological_report(nf);
            timer.lap("verify_s");
        }
    } else {
        auto nf = bnf::classical_bnf<bnf::Complex>(doc.numeric, doc.omega, doc.metric, order);
        timer.lap("normal_form_s");
        out = bnf::io::normal_form_to_json(nf);
        if (verify) {
            double worst = 0.0;
            const auto residual = bnf::verify_conjugation(nf, doc.numeric, doc.metric);
            for (const auto& [m, v] : residual.terms()) {
                worst = std::max(worst, std::abs(v));
            }
            report["conjugation_residual_max"] = worst;
            timer.lap("verify_s");
        }
    }
    if (!c.out.empty()) write_atomic(c.out, out.dump(2) + "\n");
    timer.lap("write_s");
    report["order"] = order;
    report["mode"] = mode;
    report["timings"] = timer.timings();
    if (c.out.empty()) report["normal_form"] = out;
    return {"bnf: order " + std::to_string(order) + " (" + mode + ")" + (c.out.empty() ? "" : " -> " + c.out), report};
}

Outcome verb_invert(const std::string& in, const std::string& metric_path, const Common& c) {
    Timer timer;
    const json nfj = read_json(in);
    std::optional<bnf::MetricJet> metric;
    if (!metric_path.empty()) metric = load_jet(metric_path).metric;
    const std::string mode = nfj.value("mode", "exact");
    json out;
    if (is_exact_mode(mode)) {
        auto nf = bnf::io::normal_form_from_json<bnf::ExactScalar>(nfj);
        auto jet = bnf::recover_potential<bnf::ExactScalar>(std::span<const bnf::ActionPoly<bnf::ExactScalar>>(nf.H),
                                                            nf.omega, metric);
        out = bnf::io::jet_to_json(jet, metric, nf.omega);
    } else {
        auto nf = bnf::io::normal_form_from_json<bnf::Complex>(nfj);
        auto jet = bnf::recover_potential<bnf::Complex>(std::span<const bnf::ActionPoly<bnf::Complex>>(nf.H), nf.omega,
                                                        metric);
        out = bnf::io::jet_to_json(jet, nf.omega);
    }
    timer.lap("invert_s");
    if (!c.out.empty()) write_atomic(c.out, out.dump(2) + "\n");
    json report{{"mode", mode}, {"terms", out["potential"].size()}, {"timings", timer.timings()}};
    if (c.out.empty()) report["potential"] = out;
    return {"invert: recovered " + std::to_string(out["potential"].size()) + " potential terms", report};
}

/// Exact discrepancy between a jet and its recovery: (#differing terms, max |difference|).
std::pair<std::size_t, mpq_class> discrepancy(const bnf::PotentialJet& a, const bnf::PotentialJet& b) {
    std::map<bnf::MultiIndex, mpq_class> diff;
    for (const auto& [k, v] : a.terms()) diff[k] += v;
    for (const auto& [k, v] : b.terms()) diff[k] -= v;
    std::size_t count = 0;
    mpq_class worst(0);
    for (const auto& [k, v] : diff) {
        if (sgn(v) != 0) ++count;
        worst = std::max(worst, mpq_class(abs(v)));
    }
    return {count, worst};
}

Outcome verb_roundtrip(const std::string& in, int order, const std::string& mode, int random_cases, int max_dim,
                       const Common& c) {
    Timer timer;
    json report{{"order", order}, {"mode", mode}, {"seed", c.seed}};
    if (random_cases > 0) {
        if (!is_exact_mode(mode)) throw bnf::ValidationError("randomized round trips run in exact mode");
        if (max_dim < 1 || max_dim > 3) throw bnf::ValidationError("--max-dim must be in [1, 3]");
        std::mt19937_64 rng(c.seed);
        std::size_t failures = 0;
        for (int t = 0; t < random_cases; ++t) {
            const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_dim));
            auto jet = random_jet(rng, n, order);
            const auto w = bnf::Frequencies::symbolic(n);
            auto nf = bnf::classical_bnf<bnf::ExactScalar>(jet, w, std::nullopt, order);
            auto back = bnf::recover_potential(nf);
            if (discrepancy(jet, back).first != 0) ++failures;
        }
        timer.lap("roundtrip_s");
        report["cases"] = random_cases;
        report["failures"] = failures;
        report["timings"] = timer.timings();
        return {"roundtrip: " + std::to_string(random_cases - static_cast<int>(failures)) + "/" +
                    std::to_string(random_cases) + " random jets recovered exactly (seed " + std::to_string(c.seed) + ")",
                report};
    }
    if (in.empty()) throw bnf::ValidationError("roundtrip needs --in or --random");
    const auto doc = load_jet(in);
    const bool exact = is_exact_mode(mode);
    check_mode_frequencies(exact, doc.omega);
    std::string summary;
    if (exact) {
        const auto& jet = exact_jet(doc);
        auto nf = bnf::classical_bnf<bnf::ExactScalar>(jet, doc.omega, doc.metric, order);
        auto back = bnf::recover_potential(nf, doc.metric);
        auto [count, worst] = discrepancy(jet.restricted(order), back);
        report["differing_terms"] = count;
        report["max_discrepancy"] = worst.get_str();
        summary = "max coefficient discrepancy: " + worst.get_str() + " (exact)";
    } else {
        auto nf = bnf::classical_bnf<bnf::Complex>(doc.numeric, doc.omega, doc.metric, order);
        auto back = bnf::recover_potential(nf, doc.metric);
        double worst = 0.0;
        const auto ref = doc.numeric.restricted(order);
        for (const auto& [k, v] : ref.terms()) worst = std::max(worst, std::abs(v - back.coeff(k)));
        for (const auto& [k, v] : back.terms()) worst = std::max(worst, std::abs(v - ref.coeff(k)));
        report["max_discrepancy"] = worst;
        summary = "max coefficient discrepancy: " + bnf::io::format_double(worst) + " (float)";
    }
    timer.lap("roundtrip_s");
    report["timings"] = timer.timings();
    return {summary, report};
}

Outcome verb_qbnf(const std::string& in, int degree, int hbar_order, const std::string& mode, const Common& c) {
    Timer timer;
    const auto doc = load_jet(in);
    if (doc.metric) throw bnf::ValidationError("qbnf does not support metric perturbations");
    const bool exact = is_exact_mode(mode);
    check_mode_frequencies(exact, doc.omega);
    json out;
    if (exact) {
        out = bnf::io::quantum_normal_form_to_json(
            bnf::quantum_normal_form<bnf::ExactScalar>(exact_jet(doc), doc.omega, degree, hbar_order));
    } else {
        out = bnf::io::quantum_normal_form_to_json(
            bnf::quantum_normal_form<bnf::Complex>(doc.numeric, doc.omega, degree, hbar_order));
    }
    timer.lap("qbnf_s");
    if (!c.out.empty()) write_atomic(c.out, out.dump(2) + "\n");
    json report{{"degree_cap", degree}, {"hbar_cap", hbar_order}, {"mode", mode}, {"timings", timer.timings()}};
    if (c.out.empty()) report["quantum_normal_form"] = out;
    return {"qbnf: p_0..p_" + std::to_string(hbar_order) + " through weight " + std::to_string(degree), report};
}

Outcome verb_spectrum(const std::string& pot, const std::string& in, const SolveConfig& sc, const Common& c) {
    Timer timer;
    const auto v = load_potential(pot, in);
    auto samples = run_parallel(sc.hbars.size(), c.workers,
                                [&](std::size_t i) { return solve_one(v, sc.hbars[i], sc, sc.count); });
    timer.lap("solve_s");
    std::ostringstream csv;
    bnf::io::write_spectra_csv(csv, samples);
    if (c.out.empty()) {
        std::cout << csv.str();
    } else {
        write_atomic(c.out, csv.str());
    }
    json meta = json::array();
    for (const auto& s : samples) meta.push_back(sample_meta(s));
    return {"spectrum: " + std::to_string(samples.size()) + " hbar values x " + std::to_string(sc.count) + " levels",
            {{"potential", v.name()}, {"samples", meta}, {"timings", timer.timings()}}};
}

json fit_to_json(const bnf::FitResult& f) {
    json blocks = json::array();
    for (std::size_t j = 0; j < f.p.size(); ++j) {
        json terms = json::array();
        for (const auto& [m, c] : f.p[j].terms()) {
            terms.push_back({{"m", m.to_vector(f.p[j].dim())}, {"c", c.real()}});
        }
        blocks.push_back({{"j", j}, {"terms", terms}});
    }
    return {{"n", f.p.empty() ? 0 : f.p.front().dim()},
            {"p", blocks},
            {"residual_norm", f.residual_norm},
            {"max_abs_residual", f.max_abs_residual},
            {"equations", f.equations},
            {"unknowns", f.unknowns}};
}

struct FitConfig {
    int degree = 12;
    int hbar_order = 2;
    int levels = 10;
    double max_energy = 1.0;
};

void add_fit_options(CLI::App* cmd, FitConfig& f) {
    cmd->add_option("--degree", f.degree, "weight cap of the model (even)");
    cmd->add_option("--hbar-order", f.hbar_order, "largest hbar power of the model");
    cmd->add_option("--levels", f.levels, "lowest levels used per hbar");
    cmd->add_option("--max-energy", f.max_energy, "ignore levels above this energy");
}

bnf::FitOptions fit_options(const FitConfig& f) {
    bnf::FitOptions o;
    o.levels = f.levels;
    o.max_energy = f.max_energy;
    return o;
}

Outcome verb_fit(const std::string& spectra, const std::vector<double>& omega, const FitConfig& fc, const Common& c) {
    Timer timer;
    if (omega.empty()) throw bnf::ValidationError("fit needs --omega");
    std::istringstream is(read_file(spectra));
    const auto samples = bnf::io::read_spectra_csv(is, static_cast<int>(omega.size()));
    const auto fit = bnf::fit_model_from_spectra(samples, omega, fc.degree, fc.hbar_order, fit_options(fc));
    timer.lap("fit_s");
    json out = fit_to_json(fit);
    if (!c.out.empty()) write_atomic(c.out, out.dump(2) + "\n");
    json report{{"equations", fit.equations}, {"unknowns", fit.unknowns}, {"max_abs_residual", fit.max_abs_residual},
                {"timings", timer.timings()}};
    if (c.out.empty()) report["fit"] = out;
    return {"fit: " + std::to_string(fit.unknowns) + " coefficients from " + std::to_string(fit.equations) + " levels",
            report};
}

Outcome verb_pipeline(const std::string& pot, const std::string& in, const SolveConfig& sc, const FitConfig& fc,
                      const Common& c) {
    Timer timer;
    const auto v = load_potential(pot, in);
    const auto samples = run_parallel(sc.hbars.size(), c.workers,
                                      [&](std::size_t i) { return solve_one(v, sc.hbars[i], sc, sc.count); });
    timer.lap("solve_s");
    const auto res = bnf::pipeline_invert(samples, *v.hessian(), fc.degree, fc.hbar_order, fit_options(fc));
    timer.lap("fit_s");
    const auto w = bnf::Frequencies::numeric(frequencies_of(v));
    json out = bnf::io::jet_to_json(res.jet, w);
    json comparison = json::array();
    if (v.jet()) {
        std::map<bnf::MultiIndex, std::pair<double, double>> both;
        for (const auto& [k, x] : v.jet()->terms()) both[k].first = x;
        for (const auto& [k, x] : res.jet.terms()) both[k].second = x;
        for (const auto& [k, p] : both) {
            if (k.degree() > fc.degree / 2) continue;
            comparison.push_back({{"k", k.to_vector(v.dim())}, {"input", p.first}, {"recovered", p.second},
                                  {"abs_error", std::abs(p.first - p.second)}});
        }
    }
    out["diagnostics"] = {{"fit", fit_to_json(res.fit)}, {"comparison", comparison}};
    if (!c.out.empty()) write_atomic(c.out, out.dump(2) + "\n");
    json report{{"potential", v.name()}, {"comparison", comparison}, {"timings", timer.timings()}};
    if (c.out.empty()) report["jet"] = out;
    std::string summary = "pipeline: " + std::to_string(res.jet.terms().size()) + " coefficients recovered";
    if (!comparison.empty()) {
        double worst = 0.0;
        for (const auto& e : comparison) worst = std::max(worst, e["abs_error"].get<double>());
        summary += ", max abs error " + bnf::io::format_double(worst);
    }
    return {summary, report};
}

struct TraceConfig {
    std::string source = "model";
    std::vector<double> ts;
    std::vector<double> hbars;
    double epsilon = 0.5;
    int degree = 4;
    int hbar_order = 2;
    int order_L = 2;
};

std::vector<bnf::ActionPoly<bnf::Complex>> model_for(const bnf::Potential& v, const TraceConfig& tc) {
    if (!v.jet()) throw bnf::ValidationError("model traces need a polynomial potential");
    const auto w = frequencies_of(v);
    bnf::NumericPotentialJet jet = *v.jet();
    auto q = bnf::quantum_normal_form<bnf::Complex>(bnf::normalize_quadratic(*v.hessian(), jet).jet,
                                                    bnf::Frequencies::numeric(w), tc.degree, tc.hbar_order);
    return q.p;
}

Outcome verb_trace(const std::string& pot, const std::string& in, const TraceConfig& tc, const SolveConfig& sc,
                   const Common& c) {
    Timer timer;
    require_positive(tc.epsilon, "epsilon");
    const auto v = load_potential(pot, in);
    const auto w = frequencies_of(v);
    std::vector<std::vector<bnf::Complex>> values;
    if (tc.source == "model") {
        const auto p = model_for(v, tc);
        values = run_parallel(tc.hbars.size(), c.workers, [&](std::size_t i) {
            std::vector<bnf::Complex> row;
            for (double t : tc.ts) row.push_back(bnf::trace_model(p, w, t, tc.hbars[i], tc.epsilon));
            return row;
        });
    } else if (tc.source == "spectrum") {
        values = run_parallel(tc.hbars.size(), c.workers, [&](std::size_t i) {
            const auto s = solve_past(v, tc.hbars[i], sc, tc.epsilon);
            std::vector<bnf::Complex> row;
            for (double t : tc.ts) row.push_back(bnf::trace_spectrum(s.energies, tc.hbars[i], t, tc.epsilon));
            return row;
        });
    } else {
        throw bnf::ValidationError("--source must be 'model' or 'spectrum'");
    }
    timer.lap("trace_s");
    std::ostringstream csv;
    csv << "t,hbar,re,im\n";
    for (std::size_t i = 0; i < tc.hbars.size(); ++i) {
        for (std::size_t j = 0; j < tc.ts.size(); ++j) {
            using bnf::io::format_double;
            csv << format_double(tc.ts[j]) << ',' << format_double(tc.hbars[i]) << ','
                << format_double(values[i][j].real()) << ',' << format_double(values[i][j].imag()) << '\n';
        }
    }
    if (c.out.empty()) {
        std::cout << csv.str();
    } else {
        write_atomic(c.out, csv.str());
    }
    return {"trace: " + std::to_string(tc.ts.size() * tc.hbars.size()) + " values (" + tc.source + ")",
            {{"potential", v.name()}, {"epsilon", tc.epsilon}, {"timings", timer.timings()}}};
}

Outcome verb_trace_fit(const std::string& pot, const std::string& in, const TraceConfig& tc, const Common& c) {
    Timer timer;
    require_positive(tc.epsilon, "epsilon");
    if (tc.ts.size() != 1) throw bnf::ValidationError("trace-fit takes exactly one --t");
    const double t = tc.ts.front();
    const auto v = load_potential(pot, in);
    const auto w = frequencies_of(v);
    const auto p = model_for(v, tc);
    std::vector<std::pair<double, bnf::Complex>> traces;
    for (double h : tc.hbars) traces.emplace_back(h, bnf::trace_model(p, w, t, h, tc.epsilon));
    const auto fit = bnf::fit_expansion(traces, tc.order_L);
    const auto lead = bnf::harmonic_leading(w, t);
    timer.lap("fit_s");
    json a = json::array();
    for (std::size_t l = 0; l < fit.a.size(); ++l) a.push_back({{"l", l}, {"re", fit.a[l].real()}, {"im", fit.a[l].imag()}});
    json res = json::array();
    for (const auto& r : fit.residuals) res.push_back({{"re", r.real()}, {"im", r.imag()}});
    json out{{"t", t},
             {"epsilon", tc.epsilon},
             {"a", a},
             {"residuals", res},
             {"harmonic_leading", {{"re", lead.real()}, {"im", lead.imag()}}},
             {"a0_minus_harmonic_leading", std::abs(fit.a.front() - lead)}};
    if (!c.out.empty()) write_atomic(c.out, out.dump(2) + "\n");
    json report{{"a0_minus_harmonic_leading", std::abs(fit.a.front() - lead)}, {"timings", timer.timings()}};
    if (c.out.empty()) report["fit"] = out;
    return {"trace-fit: |a0 - harmonic leading| = " + bnf::io::format_double(std::abs(fit.a.front() - lead)), report};
}

Outcome verb_weyl(const std::string& pot, const std::string& in, double delta, const SolveConfig& sc,
                  const Common& c) {
    Timer timer;
    require_positive(delta, "delta");
    if (sc.hbars.size() != 1) throw bnf::ValidationError("weyl takes exactly one --hbar");
    const auto v = load_potential(pot, in);
    SolveConfig cc = sc;
    if (cc.box <= 0.0) cc.box = auto_box(v, delta);
    // A count only needs the drift well below the level spacing.
    if (cc.refine_tol <= 0.0) cc.refine_tol = 0.05 * sc.hbars.front();
    // Start from the Weyl prediction so one solve usually suffices.
    const double guess = bnf::weyl_volume(v, delta, cc.box) / std::pow(2.0 * M_PI * sc.hbars.front(), v.dim());
    cc.count = std::max(cc.count, static_cast<int>(guess * 1.2) + 8);
    const auto s = solve_past(v, sc.hbars.front(), cc, delta);
    const auto wc = bnf::weyl_count(v, delta, s);
    timer.lap("weyl_s");
    json out{{"potential", v.name()}, {"delta", delta},          {"hbar", s.hbar},
             {"count", wc.count},     {"prediction", wc.prediction}, {"ratio", wc.ratio},
             {"sample", sample_meta(s)}};
    if (!c.out.empty()) write_atomic(c.out, out.dump(2) + "\n");
    out["timings"] = timer.timings();
    return {"weyl: count " + std::to_string(wc.count) + ", prediction " + bnf::io::format_double(wc.prediction) +
                ", ratio " + bnf::io::format_double(wc.ratio),
            out};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Birkhoff normal forms, inverse recovery, spectra and traces"};
    app.require_subcommand(1);
    Common common;
    std::string report_path;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", common.out, "output file (written atomically)");
        cmd->add_option("--report", common.report, "write the JSON report here instead of stdout");
        cmd->add_option("--seed", common.seed, "seed for randomized runs");
    };

    std::string in, metric, mode = "exact", potential;
    int order = 4;
    bool verify = false;
    int random_cases = 0;
    int max_dim = 3;
    int degree = 6;
    int hbar_order = 2;
    double delta = 0.5;
    std::vector<double> omega;
    std::string spectra;
    SolveConfig sc;
    FitConfig fc;
    TraceConfig tc;

    auto* bnf_cmd = app.add_subcommand("bnf", "classical Birkhoff normal form of a jet");
    bnf_cmd->add_option("--in", in, "jet JSON")->required();
    bnf_cmd->add_option("--order", order, "normal form order N")->required();
    bnf_cmd->add_option("--mode", mode, "exact | float");
    bnf_cmd->add_flag("--verify", verify, "recompute the conjugation and report residuals");
    add_common(bnf_cmd);

    auto* inv_cmd = app.add_subcommand("invert", "recover the potential jet from a normal form");
    inv_cmd->add_option("--in", in, "normal form JSON")->required();
    inv_cmd->add_option("--metric", metric, "jet JSON whose metric block is known");
    add_common(inv_cmd);

    auto* rt_cmd = app.add_subcommand("roundtrip", "normal form followed by recovery");
    rt_cmd->add_option("--in", in, "jet JSON");
    rt_cmd->add_option("--order", order, "normal form order N")->required();
    rt_cmd->add_option("--mode", mode, "exact | float");
    rt_cmd->add_option("--random", random_cases, "run this many random jets instead of --in");
    rt_cmd->add_option("--max-dim", max_dim, "largest dimension of random jets");
    add_common(rt_cmd);

    auto* q_cmd = app.add_subcommand("qbnf", "semiclassical normal form p_0..p_J");
    q_cmd->add_option("--in", in, "jet JSON")->required();
    q_cmd->add_option("--degree", degree, "weight cap (even)");
    q_cmd->add_option("--hbar-order", hbar_order, "largest hbar power");
    q_cmd->add_option("--mode", mode, "exact | float");
    add_common(q_cmd);

    auto* sp_cmd = app.add_subcommand("spectrum", "finite-difference eigenvalues as CSV");
    sp_cmd->add_option("--potential", potential, "builtin potential name");
    sp_cmd->add_option("--in", in, "jet JSON with numeric omega");
    add_solve_options(sp_cmd, sc, true);
    add_common(sp_cmd);

    auto* fit_cmd = app.add_subcommand("fit", "fit the model eigenvalue function to spectra");
    fit_cmd->add_option("--spectra", spectra, "CSV from the spectrum verb")->required();
    fit_cmd->add_option("--omega", omega, "numeric frequencies")->delimiter(',')->required();
    add_fit_options(fit_cmd, fc);
    add_common(fit_cmd);

    auto* pipe_cmd = app.add_subcommand("pipeline", "spectra, fit and recovery of the potential");
    pipe_cmd->add_option("--potential", potential, "builtin potential name");
    pipe_cmd->add_option("--in", in, "jet JSON with numeric omega");
    add_solve_options(pipe_cmd, sc, true);
    add_fit_options(pipe_cmd, fc);
    add_common(pipe_cmd);

    auto* tr_cmd = app.add_subcommand("trace", "smoothed traces as CSV");
    tr_cmd->add_option("--potential", potential, "builtin potential name");
    tr_cmd->add_option("--in", in, "jet JSON with numeric omega");
    tr_cmd->add_option("--source", tc.source, "model | spectrum");
    tr_cmd->add_option("--t", tc.ts, "times")->delimiter(',')->required();
    tr_cmd->add_option("--hbar", tc.hbars, "hbar values")->delimiter(',')->required();
    tr_cmd->add_option("--epsilon", tc.epsilon, "energy cutoff");
    tr_cmd->add_option("--degree", tc.degree, "model weight cap");
    tr_cmd->add_option("--hbar-order", tc.hbar_order, "model hbar order");
    tr_cmd->add_option("--grid", sc.grid, "grid points (spectrum source)");
    tr_cmd->add_option("--box", sc.box, "box half-width (spectrum source)");
    add_common(tr_cmd);

    auto* tf_cmd = app.add_subcommand("trace-fit", "fit the hbar expansion of model traces");
    tf_cmd->add_option("--potential", potential, "builtin potential name");
    tf_cmd->add_option("--in", in, "jet JSON with numeric omega");
    tf_cmd->add_option("--t", tc.ts, "time")->required();
    tf_cmd->add_option("--hbar", tc.hbars, "hbar ladder")->delimiter(',')->required();
    tf_cmd->add_option("--epsilon", tc.epsilon, "energy cutoff");
    tf_cmd->add_option("--L", tc.order_L, "highest fitted power");
    tf_cmd->add_option("--degree", tc.degree, "model weight cap");
    tf_cmd->add_option("--hbar-order", tc.hbar_order, "model hbar order");
    add_common(tf_cmd);

    auto* wy_cmd = app.add_subcommand("weyl", "eigenvalue count against the Weyl law");
    wy_cmd->add_option("--potential", potential, "builtin potential name");
    wy_cmd->add_option("--in", in, "jet JSON with numeric omega");
    wy_cmd->add_option("--delta", delta, "energy level");
    add_solve_options(wy_cmd, sc, true);
    add_common(wy_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        common.workers = std::max(1, env_int("BNF_WORKERS", 1));
        Outcome res;
        if (*bnf_cmd) res = verb_bnf(in, order, mode, verify, common);
        else if (*inv_cmd) res = verb_invert(in, metric, common);
        else if (*rt_cmd) res = verb_roundtrip(in, order, mode, random_cases, max_dim, common);
        else if (*q_cmd) res = verb_qbnf(in, degree, hbar_order, mode, common);
        else if (*sp_cmd) res = verb_spectrum(potential, in, sc, common);
        else if (*fit_cmd) res = verb_fit(spectra, omega, fc, common);
        else if (*pipe_cmd) res = verb_pipeline(potential, in, sc, fc, common);
        else if (*tr_cmd) res = verb_trace(potential, in, tc, sc, common);
        else if (*tf_cmd) res = verb_trace_fit(potential, in, tc, common);
        else if (*wy_cmd) res = verb_weyl(potential, in, delta, sc, common);

        res.report["verb"] = app.get_subcommands().front()->get_name();
        res.report["seed"] = common.seed;
        res.report["workers"] = common.workers;
        res.report["status"] = "ok";
        // Data verbs that stream CSV to stdout keep the summary on stderr.
        const bool csv_on_stdout = common.out.empty() && (*sp_cmd || *tr_cmd);
        (csv_on_stdout ? std::cerr : std::cout) << res.summary << "\n";
        if (!common.report.empty()) {
            write_atomic(common.report, res.report.dump(2) + "\n");
        } else if (!csv_on_stdout) {
            std::cout << res.report.dump() << "\n";
        }
        return kOk;
    } catch (const bnf::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const bnf::MathError& e) {
        std::cerr << "math error: " << e.what() << "\n";
        return kMath;
    } catch (const bnf::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kIo;
    } catch (const json::exception& e) {
        std::cerr << "error: malformed input: " << e.what() << "\n";
        return kValidation;
    } catch (const std::bad_alloc&) {
        std::cerr << "error: out of memory\n";
        return kMath;
    }
}
