#pragma once

// Finite-difference eigenvalues of -hbar^2 Laplacian + V on a box, Weyl-law
// counting, and least-squares fitting of the model eigenvalue function to
// computed spectra.

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bnf/inverse.hpp"
#include "bnf/quantum.hpp"

namespace bnf {

/// A real potential on R^n, n in {1, 2}, optionally carrying its polynomial
/// form sum_i u_i x_i^2 + sum_k c_k x^{2k}.
class Potential {
public:
    using Function = std::function<double(std::span<const double>)>;

    static Potential polynomial(std::vector<double> hessian, NumericPotentialJet jet, std::string name = "polynomial");
    static Potential custom(int dim, Function f, std::string name);
    /// "harmonic1d" (x^2), "quartic1d" (x^2 + x^4), "harmonic2d" (x1^2 + 2 x2^2),
    /// "coupled2d" (x1^2 + 2 x2^2 + x1^2 x2^2 / 10).
    static Potential builtin(const std::string& name);

    int dim() const { return dim_; }
    const std::string& name() const { return name_; }
    double operator()(std::span<const double> x) const { return f_(x); }
    double operator()(double x) const { return f_(std::span<const double>(&x, 1)); }

    /// The u_i of the quadratic part, when known.
    const std::optional<std::vector<double>>& hessian() const { return hessian_; }
    const std::optional<NumericPotentialJet>& jet() const { return jet_; }

private:
    int dim_ = 1;
    Function f_;
    std::string name_;
    std::optional<std::vector<double>> hessian_;
    std::optional<NumericPotentialJet> jet_;
};

struct SpectrumSample {
    double hbar = 0.0;
    std::vector<double> energies;  // ascending
    int dim = 1;
    int grid_points = 0;           // per axis, interior points of the base grid
    double box_halfwidth = 0.0;
    int order = 2;                 // accuracy order of the stencil
    double refinement_drift = std::numeric_limits<double>::quiet_NaN();
    double refinement_tol = std::numeric_limits<double>::quiet_NaN();
};

struct EigensolveOptions {
    double box_halfwidth = 4.0;
    int grid_points = 2000;
    int count = 10;
    bool refine = true;            // re-solve on the doubled grid and record the drift
    double refinement_tol = 1e-6;  // ConvergenceError when the drift exceeds it
};

/// Lowest `count` Dirichlet eigenvalues of -hbar^2 Laplacian + V by second-order
/// central differences on a uniform grid with `grid_points` interior nodes per
/// axis.  With `refine`, the stored energies come from the doubled grid
/// (2 grid_points + 1 nodes, nested) and the drift between the two grids is
/// recorded.
SpectrumSample eigensolve(const Potential& v, double hbar, const EigensolveOptions& opt);

/// Smallest half-width L (on a 1/8 grid) such that V >= factor * energy on
/// every coordinate axis beyond L.
double default_box(const Potential& v, double energy, double factor = 4.0);

struct WeylCount {
    long count = 0;
    double prediction = 0.0;
    double ratio = 0.0;
};

/// #{E <= delta} against (2 pi hbar)^{-n} Vol{|xi|^2 + V(x) <= delta}.
WeylCount weyl_count(const Potential& v, double delta, const SpectrumSample& spectrum);

/// Phase-space volume of {|xi|^2 + V <= delta} inside the box [-L, L]^n.
/// Throws ValidationError when the region reaches the box boundary.
double weyl_volume(const Potential& v, double delta, double box_halfwidth);

struct FitOptions {
    int levels = 6;  // lowest levels used per sample
    double max_energy = std::numeric_limits<double>::infinity();  // levels above are ignored
    bool even_hbar_only = true;  // odd p_j vanish for even potentials; leave them out of the basis
};

struct FitResult {
    std::vector<ActionPoly<Complex>> p;  // p[j]: coefficient of hbar^j, p[0] includes sum omega_i s_i
    double residual_norm = 0.0;          // weighted
    double max_abs_residual = 0.0;       // unweighted
    int equations = 0;
    int unknowns = 0;
};

/// Fits E_k(hbar) ~ sum_j hbar^j p_j((2k+1) hbar) by weighted least squares.
/// Levels are labelled by sorting against sum_i omega_i (2k_i + 1) hbar; the
/// linear part of p_0 is fixed to sum omega_i s_i.  Unknowns are the
/// coefficients of hbar^j s^m with 2(j + |m|) <= degree_cap, excluding the
/// linear and constant terms of p_0.  Each equation is weighted by
/// hbar^{-(degree_cap/2 + 1)}, the size of the first neglected order.
FitResult fit_model_from_spectra(const std::vector<SpectrumSample>& samples, std::span<const double> omega,
                                 int degree_cap, int hbar_cap, const FitOptions& opt = {});

struct PipelineResult {
    NumericPotentialJet jet;  // in the original coordinates
    FitResult fit;
};

/// Fit followed by recovery of the potential from the fitted p_0.  `hessian`
/// holds the u_i of the quadratic part; omega_i = sqrt(u_i).
PipelineResult pipeline_invert(const std::vector<SpectrumSample>& samples, const std::vector<double>& hessian,
                               int degree_cap, int hbar_cap, const FitOptions& opt = {});

/// Lattice labels k sorted by the harmonic prediction sum omega_i (2k_i+1),
/// ties broken lexicographically; `count` entries.
std::vector<MultiIndex> harmonic_labels(std::span<const double> omega, int count);

}  // namespace bnf
