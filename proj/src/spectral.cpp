#include "bnf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <lapacke.h>
// Last: it drags in <complex.h>, whose I and complex macros break later headers.
#include <arpack/arpack.hpp>
#undef I
#undef complex

namespace bnf {

// ---------------------------------------------------------------- potentials

Potential Potential::polynomial(std::vector<double> hessian, NumericPotentialJet jet, std::string name) {
    if (static_cast<int>(hessian.size()) != jet.dim()) throw ValidationError("potential: dimension mismatch");
    const int n = jet.dim();
    if (n > 2) throw ValidationError("numerical potentials support n = 1 or 2");
    Potential p;
    p.dim_ = n;
    p.name_ = std::move(name);
    p.f_ = [hessian, terms = jet.terms(), n](std::span<const double> x) {
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += hessian[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        for (const auto& [k, c] : terms) {
            double mono = c;
            for (int i = 0; i < n; ++i) mono *= std::pow(x[static_cast<std::size_t>(i)], 2 * k[i]);
            v += mono;
        }
        return v;
    };
    p.hessian_ = std::move(hessian);
    p.jet_ = std::move(jet);
    return p;
}

Potential Potential::custom(int dim, Function f, std::string name) {
    if (dim < 1 || dim > 2) throw ValidationError("numerical potentials support n = 1 or 2");
    Potential p;
    p.dim_ = dim;
    p.f_ = std::move(f);
    p.name_ = std::move(name);
    return p;
}

Potential Potential::builtin(const std::string& name) {
    const MultiIndex quartic = MultiIndex::from(std::vector<int>{2});
    if (name == "harmonic1d") return polynomial({1.0}, NumericPotentialJet(1), name);
    if (name == "quartic1d") {
        NumericPotentialJet j(1);
        j.set(quartic, 1.0);
        return polynomial({1.0}, j, name);
    }
    if (name == "harmonic2d") return polynomial({1.0, 2.0}, NumericPotentialJet(2), name);
    if (name == "coupled2d") {
        NumericPotentialJet j(2);
        j.set(MultiIndex::from(std::vector<int>{1, 1}), 0.1);
        return polynomial({1.0, 2.0}, j, name);
    }
    throw ValidationError("unknown builtin potential '" + name + "'");
}

// ---------------------------------------------------------------- eigensolver

namespace {

std::vector<double> solve_1d(const Potential& v, double hbar, double box, int points, int count) {
    const double h = 2.0 * box / (points + 1);
    const double kin = hbar * hbar / (h * h);
    std::vector<double> d(static_cast<std::size_t>(points));
    std::vector<double> e(static_cast<std::size_t>(points), -kin);
    for (int i = 0; i < points; ++i) d[static_cast<std::size_t>(i)] = 2.0 * kin + v(-box + (i + 1) * h);
    std::vector<double> w(static_cast<std::size_t>(points));
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(count));
    double z = 0.0;
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'N', 'I', points, d.data(), e.data(), 0.0, 0.0, 1, count,
                                           0.0, &found, w.data(), &z, 1, isuppz.data());
    if (info != 0 || found != count) throw ConvergenceError("dstevr failed (info " + std::to_string(info) + ")");
    w.resize(static_cast<std::size_t>(count));
    return w;
}

std::vector<double> solve_2d(const Potential& v, double hbar, double box, int points, int count) {
    const double h = 2.0 * box / (points + 1);
    const double kin = hbar * hbar / (h * h);
    const int n = points * points;
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(5 * static_cast<std::size_t>(n));
    double vmin = std::numeric_limits<double>::infinity();
    for (int b = 0; b < points; ++b) {
        for (int a = 0; a < points; ++a) {
            const int idx = a + points * b;
            const std::array<double, 2> x{-box + (a + 1) * h, -box + (b + 1) * h};
            const double vx = v(x);
            vmin = std::min(vmin, vx);
            entries.emplace_back(idx, idx, 4.0 * kin + vx);
            if (a > 0) entries.emplace_back(idx, idx - 1, -kin);
            if (a + 1 < points) entries.emplace_back(idx, idx + 1, -kin);
            if (b > 0) entries.emplace_back(idx, idx - points, -kin);
            if (b + 1 < points) entries.emplace_back(idx, idx + points, -kin);
        }
    }
    // Shift-invert about min V: A - sigma is positive definite and the wanted
    // levels become the largest eigenvalues of its inverse.
    const double sigma = vmin;
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(entries.begin(), entries.end());
    for (int i = 0; i < n; ++i) a.coeffRef(i, i) -= sigma;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw ConvergenceError("sparse factorization failed");

    const a_int nev = count;
    const a_int ncv = std::min<a_int>(n, std::max<a_int>(2 * nev + 1, 24));
    const a_int lworkl = ncv * (ncv + 8);
    // A symmetric start vector would miss the odd states; use a fixed random one.
    std::vector<double> resid(static_cast<std::size_t>(n));
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (auto& r : resid) r = unit(rng);
    std::vector<double> basis(static_cast<std::size_t>(n) * static_cast<std::size_t>(ncv));
    std::vector<double> workd(3 * static_cast<std::size_t>(n));
    std::vector<double> workl(static_cast<std::size_t>(lworkl));
    std::array<a_int, 11> iparam{};
    std::array<a_int, 14> ipntr{};
    iparam[0] = 1;
    iparam[2] = 3000;
    iparam[6] = 3;
    a_int ido = 0;
    a_int info = 1;  // start from the deterministic resid above
    for (;;) {
        arpack::saupd(ido, arpack::bmat::identity, n, arpack::which::largest_magnitude, nev, 0.0, resid.data(), ncv,
                      basis.data(), n, iparam.data(), ipntr.data(), workd.data(), workl.data(), lworkl, info);
        if (ido != -1 && ido != 1) break;
        Eigen::Map<const Eigen::VectorXd> in(workd.data() + ipntr[0] - 1, n);
        Eigen::Map<Eigen::VectorXd> out(workd.data() + ipntr[1] - 1, n);
        out = ldlt.solve(in);
    }
    if (info != 0) throw ConvergenceError("Lanczos iteration failed (info " + std::to_string(info) + ")");
    std::vector<a_int> select(static_cast<std::size_t>(ncv));
    std::vector<double> w(static_cast<std::size_t>(nev));
    double z = 0.0;
    arpack::seupd(0, arpack::howmny::ritz_vectors, select.data(), w.data(), &z, 1, sigma, arpack::bmat::identity, n,
                  arpack::which::largest_magnitude, nev, 0.0, resid.data(), ncv, basis.data(), n, iparam.data(),
                  ipntr.data(), workd.data(), workl.data(), lworkl, info);
    if (info != 0 || iparam[4] < nev) throw ConvergenceError("Lanczos extraction failed (info " + std::to_string(info) + ")");
    std::sort(w.begin(), w.end());
    return w;
}

std::vector<double> solve_grid(const Potential& v, double hbar, double box, int points, int count) {
    return v.dim() == 1 ? solve_1d(v, hbar, box, points, count) : solve_2d(v, hbar, box, points, count);
}

}  // namespace

SpectrumSample eigensolve(const Potential& v, double hbar, const EigensolveOptions& opt) {
    if (!(hbar > 0.0)) throw ValidationError("hbar must be positive");
    if (!(opt.box_halfwidth > 0.0)) throw ValidationError("box half-width must be positive");
    if (opt.grid_points < 8) throw ValidationError("grid must have at least 8 points per axis");
    if (opt.count < 1) throw ValidationError("eigenvalue count must be >= 1");
    long total = opt.grid_points;
    if (v.dim() == 2) total *= opt.grid_points;
    if (opt.count > total / 4) throw ValidationError("eigenvalue count too large for the grid");

    SpectrumSample s;
    s.hbar = hbar;
    s.dim = v.dim();
    s.grid_points = opt.grid_points;
    s.box_halfwidth = opt.box_halfwidth;
    s.energies = solve_grid(v, hbar, opt.box_halfwidth, opt.grid_points, opt.count);
    if (opt.refine) {
        auto fine = solve_grid(v, hbar, opt.box_halfwidth, 2 * opt.grid_points + 1, opt.count);
        double drift = 0.0;
        for (std::size_t i = 0; i < fine.size(); ++i) drift = std::max(drift, std::abs(fine[i] - s.energies[i]));
        s.energies = std::move(fine);
        s.refinement_drift = drift;
        s.refinement_tol = opt.refinement_tol;
        if (drift > opt.refinement_tol) {
            throw ConvergenceError("grid refinement moved eigenvalues by " + std::to_string(drift) +
                                   " (tolerance " + std::to_string(opt.refinement_tol) + ")");
        }
    }
    return s;
}

double default_box(const Potential& v, double energy, double factor) {
    if (!(energy > 0.0)) throw ValidationError("default_box: energy must be positive");
    const double target = factor * energy;
    for (double l = 0.125; l <= 1e3; l += 0.125) {
        bool ok = true;
        for (int axis = 0; axis < v.dim() && ok; ++axis) {
            for (double sign : {-1.0, 1.0}) {
                std::array<double, 2> x{0.0, 0.0};
                x[static_cast<std::size_t>(axis)] = sign * l;
                if (v(std::span<const double>(x.data(), static_cast<std::size_t>(v.dim()))) < target) ok = false;
            }
        }
        if (ok) return l;
    }
    throw ValidationError("default_box: potential does not reach the requested level");
}

// ---------------------------------------------------------------- Weyl law

namespace {

/// Maximal subintervals of [a, b] where f > 0, endpoints refined to roots.
std::vector<std::pair<double, double>> positive_intervals(const std::function<double(double)>& f, double a, double b,
                                                          int samples = 2048) {
    std::vector<std::pair<double, double>> out;
    auto root = [&](double lo, double hi) {
        boost::math::tools::eps_tolerance<double> tol(50);
        std::uintmax_t iters = 200;
        auto r = boost::math::tools::bisect(f, lo, hi, tol, iters);
        return 0.5 * (r.first + r.second);
    };
    const double h = (b - a) / samples;
    double prev_x = a;
    double prev = f(a);
    double start = a;
    bool inside = prev > 0.0;
    for (int i = 1; i <= samples; ++i) {
        const double x = i == samples ? b : a + i * h;
        const double fx = f(x);
        if (!inside && fx > 0.0) {
            start = root(prev_x, x);
            inside = true;
        } else if (inside && fx <= 0.0) {
            out.emplace_back(start, root(prev_x, x));
            inside = false;
        }
        prev_x = x;
        prev = fx;
    }
    if (inside) out.emplace_back(start, b);
    return out;
}

}  // namespace

double weyl_volume(const Potential& v, double delta, double box) {
    if (!(delta > 0.0)) throw ValidationError("delta must be positive");
    if (!(box > 0.0)) throw ValidationError("box half-width must be positive");
    using boost::math::quadrature::gauss_kronrod;
    if (v.dim() == 1) {
        if (v(-box) < delta || v(box) < delta) {
            throw ValidationError("box too small: classically allowed region reaches the boundary");
        }
        boost::math::quadrature::tanh_sinh<double> ts;
        double vol = 0.0;
        for (auto [lo, hi] : positive_intervals([&](double x) { return delta - v(x); }, -box, box)) {
            vol += ts.integrate([&](double x) { return 2.0 * std::sqrt(std::max(0.0, delta - v(x))); }, lo, hi);
        }
        return vol;
    }
    for (int i = 0; i <= 512; ++i) {
        const double t = -box + 2.0 * box * i / 512;
        const std::array<std::array<double, 2>, 4> edge{{{t, -box}, {t, box}, {-box, t}, {box, t}}};
        for (const auto& x : edge) {
            if (v(x) < delta) throw ValidationError("box too small: classically allowed region reaches the boundary");
        }
    }
    auto inner = [&](double x1) {
        auto f = [&](double x2) {
            const std::array<double, 2> x{x1, x2};
            return delta - v(x);
        };
        double s = 0.0;
        for (auto [lo, hi] : positive_intervals(f, -box, box, 512)) {
            s += gauss_kronrod<double, 31>::integrate([&](double x2) { return std::numbers::pi * std::max(0.0, f(x2)); },
                                                     lo, hi, 10, 1e-12);
        }
        return s;
    };
    return gauss_kronrod<double, 61>::integrate(inner, -box, box, 15, 1e-10);
}

WeylCount weyl_count(const Potential& v, double delta, const SpectrumSample& spectrum) {
    if (spectrum.dim != v.dim()) throw ValidationError("weyl_count: dimension mismatch");
    if (spectrum.energies.empty() || spectrum.energies.back() <= delta) {
        throw ValidationError("weyl_count: spectrum does not exhaust [0, delta]; request more eigenvalues");
    }
    WeylCount w;
    w.count = std::count_if(spectrum.energies.begin(), spectrum.energies.end(), [&](double e) { return e <= delta; });
    w.prediction = weyl_volume(v, delta, spectrum.box_halfwidth) / std::pow(2.0 * std::numbers::pi * spectrum.hbar, v.dim());
    w.ratio = static_cast<double>(w.count) / w.prediction;
    return w;
}

// ---------------------------------------------------------------- fitting

std::vector<MultiIndex> harmonic_labels(std::span<const double> omega, int count) {
    const int n = static_cast<int>(omega.size());
    if (n < 1 || n > kMaxDim) throw ValidationError("harmonic_labels: bad dimension");
    if (count < 1) return {};
    auto level = [&](const MultiIndex& k) {
        double e = 0.0;
        for (int i = 0; i < n; ++i) e += omega[static_cast<std::size_t>(i)] * (2 * k[i] + 1);
        return e;
    };
    double base = 0.0;
    for (double w : omega) base += w;
    // The count-th level along the slowest axis bounds the count-th overall.
    const double bound = base + 2.0 * (count - 1) * *std::min_element(omega.begin(), omega.end()) + 1e-12;
    std::vector<MultiIndex> all;
    MultiIndex k;
    auto rec = [&](auto&& self, int axis) -> void {
        if (axis == n) {
            all.push_back(k);
            return;
        }
        for (int v = 0;; ++v) {
            k.k[static_cast<std::size_t>(axis)] = static_cast<std::uint8_t>(v);
            MultiIndex probe = k;
            for (int j = axis + 1; j < n; ++j) probe.k[static_cast<std::size_t>(j)] = 0;
            if (level(probe) > bound || v > 250) break;
            self(self, axis + 1);
        }
        k.k[static_cast<std::size_t>(axis)] = 0;
    };
    rec(rec, 0);
    std::stable_sort(all.begin(), all.end(), [&](const MultiIndex& a, const MultiIndex& b) {
        const double la = level(a);
        const double lb = level(b);
        return la != lb ? la < lb : a < b;
    });
    if (static_cast<int>(all.size()) > count) all.resize(static_cast<std::size_t>(count));
    return all;
}

namespace {

struct Unknown {
    int j;
    MultiIndex m;
};

std::vector<Unknown> fit_unknowns(int n, int degree_cap, int hbar_cap, bool even_only) {
    std::vector<Unknown> out;
    const int top = degree_cap / 2;
    for (int j = 0; j <= hbar_cap && j <= top; j += even_only ? 2 : 1) {
        // All m with |m| <= top - j.
        MultiIndex m;
        auto rec = [&](auto&& self, int axis, int left) -> void {
            if (axis == n) {
                if (j > 0 || m.degree() >= 2) out.push_back({j, m});
                return;
            }
            for (int v = 0; v <= left; ++v) {
                m.k[static_cast<std::size_t>(axis)] = static_cast<std::uint8_t>(v);
                self(self, axis + 1, left - v);
            }
            m.k[static_cast<std::size_t>(axis)] = 0;
        };
        rec(rec, 0, top - j);
    }
    return out;
}

}  // namespace

FitResult fit_model_from_spectra(const std::vector<SpectrumSample>& samples, std::span<const double> omega,
                                 int degree_cap, int hbar_cap, const FitOptions& opt) {
    const int n = static_cast<int>(omega.size());
    if (n < 1 || n > 2) throw ValidationError("fit: dimension must be 1 or 2");
    if (degree_cap < 2 || degree_cap % 2 != 0) throw ValidationError("fit: degree cap must be even and >= 2");
    if (hbar_cap < 0) throw ValidationError("fit: hbar cap must be >= 0");
    if (opt.levels < 1) throw ValidationError("fit: need at least one level per sample");
    for (double w : omega) {
        if (!(w > 0.0)) throw ValidationError("fit: frequencies must be positive");
    }
    std::vector<double> hbars;
    for (const auto& s : samples) {
        if (s.dim != n) throw ValidationError("fit: sample dimension differs from frequencies");
        if (std::find(hbars.begin(), hbars.end(), s.hbar) == hbars.end()) hbars.push_back(s.hbar);
    }
    if (hbars.size() < 3) throw ValidationError("fit: need at least 3 distinct hbar values");

    const auto unknowns = fit_unknowns(n, degree_cap, hbar_cap, opt.even_hbar_only);
    const double min_gap = 2.0 * *std::min_element(omega.begin(), omega.end());
    const auto labels = harmonic_labels(omega, opt.levels + 1);
    auto harmonic = [&](const MultiIndex& k) {
        double e = 0.0;
        for (int i = 0; i < n; ++i) e += omega[static_cast<std::size_t>(i)] * (2 * k[i] + 1);
        return e;
    };
    for (std::size_t i = 1; i < labels.size(); ++i) {
        if (harmonic(labels[i]) - harmonic(labels[i - 1]) < 0.25 * min_gap) {
            throw AmbiguousLabels("fit: harmonic levels " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                  " are closer than a quarter of the minimal gap");
        }
    }

    struct Row {
        double hbar;
        MultiIndex k;
        double energy;
    };
    std::vector<Row> rows;
    for (const auto& s : samples) {
        const int used = std::min<int>(opt.levels, static_cast<int>(s.energies.size()));
        for (int i = 0; i < used; ++i) {
            const double e = s.energies[static_cast<std::size_t>(i)];
            if (e > opt.max_energy) break;
            rows.push_back({s.hbar, labels[static_cast<std::size_t>(i)], e});
        }
    }
    const auto m_rows = static_cast<Eigen::Index>(rows.size());
    const auto m_cols = static_cast<Eigen::Index>(unknowns.size());
    FitResult out;
    out.equations = static_cast<int>(m_rows);
    out.unknowns = static_cast<int>(m_cols);
    if (m_rows < m_cols) throw RankDeficient("fit: fewer equations than unknowns");

    auto basis = [&](const Row& r, const Unknown& u) {
        double v = std::pow(r.hbar, u.j);
        for (int i = 0; i < n; ++i) v *= std::pow((2 * r.k[i] + 1) * r.hbar, u.m[i]);
        return v;
    };
    const double weight_power = -(degree_cap / 2 + 1);
    Eigen::MatrixXd a(m_rows, m_cols);
    Eigen::VectorXd b(m_rows);
    for (Eigen::Index r = 0; r < m_rows; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        const double wgt = std::pow(row.hbar, weight_power);
        for (Eigen::Index c = 0; c < m_cols; ++c) a(r, c) = wgt * basis(row, unknowns[static_cast<std::size_t>(c)]);
        b(r) = wgt * (row.energy - row.hbar * harmonic(row.k));
    }
    Eigen::VectorXd scale = a.colwise().norm().transpose();
    for (Eigen::Index c = 0; c < m_cols; ++c) {
        if (scale(c) == 0.0) throw RankDeficient("fit: an unknown is not constrained by the data");
        a.col(c) /= scale(c);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-12);
    if (qr.rank() < m_cols) throw RankDeficient("fit: design matrix is rank deficient");
    Eigen::VectorXd x = qr.solve(b);
    out.residual_norm = (a * x - b).norm();
    x = x.cwiseQuotient(scale);

    out.p.assign(static_cast<std::size_t>(hbar_cap + 1), ActionPoly<Complex>(n));
    for (int i = 0; i < n; ++i) out.p[0].add_term(MultiIndex::unit(i), Complex(omega[static_cast<std::size_t>(i)], 0.0));
    for (std::size_t c = 0; c < unknowns.size(); ++c) {
        out.p[static_cast<std::size_t>(unknowns[c].j)].add_term(unknowns[c].m, Complex(x(static_cast<Eigen::Index>(c)), 0.0));
    }
    for (const auto& row : rows) {
        const double model = model_eigenvalue(out.p, row.k, row.hbar, omega);
        out.max_abs_residual = std::max(out.max_abs_residual, std::abs(model - row.energy));
    }
    return out;
}

PipelineResult pipeline_invert(const std::vector<SpectrumSample>& samples, const std::vector<double>& hessian,
                               int degree_cap, int hbar_cap, const FitOptions& opt) {
    if (degree_cap < 4) throw ValidationError("pipeline: degree cap must be >= 4 to recover any potential term");
    std::vector<double> omega;
    std::vector<double> lambda;
    for (double u : hessian) {
        if (!(u > 0.0)) throw ValidationError("pipeline: Hessian entries must be positive");
        omega.push_back(std::sqrt(u));
        lambda.push_back(std::pow(u, -0.25));
    }
    PipelineResult out{NumericPotentialJet(static_cast<int>(hessian.size())),
                       fit_model_from_spectra(samples, omega, degree_cap, hbar_cap, opt)};
    std::vector<ActionPoly<Complex>> h;
    for (int i = 2; i <= degree_cap / 2; ++i) h.push_back(out.fit.p[0].degree_part(i));
    const auto normalized = recover_potential<Complex>(std::span<const ActionPoly<Complex>>(h), Frequencies::numeric(omega));
    out.jet = denormalize_jet(lambda, normalized);
    return out;
}

}  // namespace bnf
