#include "bnf/trace.hpp"

#include <algorithm>

#include <Eigen/Dense>

namespace bnf {

double bump(double s) {
    if (s <= 0.5) return 1.0;
    if (s >= 1.0) return 0.0;
    auto m = [](double t) { return std::exp(-1.0 / t); };
    const double a = m(1.0 - s);
    const double b = m(s - 0.5);
    return a / (a + b);
}

Complex trace_spectrum(std::span<const double> energies, double hbar, double t, double epsilon) {
    if (!(hbar > 0.0) || !(epsilon > 0.0)) throw ValidationError("trace_spectrum: hbar and epsilon must be positive");
    if (energies.empty() || energies.back() < epsilon) {
        throw ValidationError("trace_spectrum: sample is truncated below epsilon");
    }
    Complex sum = 0.0;
    for (double e : energies) {
        const double w = bump(e / epsilon);
        if (w != 0.0) sum += w * std::exp(Complex(0.0, -t * e / hbar));
    }
    return sum;
}

Complex harmonic_leading(std::span<const double> omega, double t) {
    Complex out = 1.0;
    for (double w : omega) {
        const double s = std::sin(w * t);
        if (std::abs(s) < 1e-9) throw ResonantTime("sin(omega t) vanishes for omega = " + std::to_string(w));
        out /= Complex(0.0, 2.0 * s);
    }
    return out;
}

ExpansionFit fit_expansion(const std::vector<std::pair<double, Complex>>& traces, int L) {
    if (L < 0) throw ValidationError("fit_expansion: L must be >= 0");
    std::vector<double> h;
    for (const auto& [hb, tr] : traces) {
        if (!(hb > 0.0)) throw ValidationError("fit_expansion: hbar must be positive");
        h.push_back(hb);
    }
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
    if (static_cast<int>(h.size()) < L + 2) throw ValidationError("fit_expansion: need at least L + 2 distinct hbar");
    for (std::size_t i = 1; i < h.size(); ++i) {
        if (h[i] / h[i - 1] < 1.1) throw ValidationError("fit_expansion: hbar ladder ratio too close to 1");
    }
    // Columns in the variable hbar / hbar_max keep the Vandermonde matrix tame.
    const double scale = h.back();
    const auto rows = static_cast<Eigen::Index>(traces.size());
    Eigen::MatrixXcd a(rows, L + 1);
    Eigen::VectorXcd b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double x = traces[static_cast<std::size_t>(r)].first / scale;
        double p = 1.0;
        for (int l = 0; l <= L; ++l, p *= x) a(r, l) = p;
        b(r) = traces[static_cast<std::size_t>(r)].second;
    }
    Eigen::VectorXcd x = a.colPivHouseholderQr().solve(b);
    ExpansionFit out;
    const Eigen::VectorXcd res = a * x - b;
    for (Eigen::Index r = 0; r < rows; ++r) out.residuals.push_back(res(r));
    double p = 1.0;
    for (int l = 0; l <= L; ++l, p *= scale) out.a.push_back(x(l) / p);
    return out;
}

}  // namespace bnf
