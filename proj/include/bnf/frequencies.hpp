#pragma once

#include <span>
#include <string>
#include <vector>

namespace bnf {

enum class FrequencyMode { Symbolic, Numeric };

/// Harmonic frequencies omega of the quadratic part sum_i omega_i (x_i^2 + xi_i^2).
///
/// Symbolic frequencies are independent indeterminates w1..wn; numeric ones
/// are positive distinct reals with a resonance tolerance that is checked
/// lazily, at each division by <m, omega>.
class Frequencies {
public:
    static Frequencies symbolic(int n);
    static Frequencies numeric(std::vector<double> values, double resonance_tol = 1e-9);

    int dim() const { return n_; }
    FrequencyMode mode() const { return mode_; }
    bool is_symbolic() const { return mode_ == FrequencyMode::Symbolic; }
    std::span<const double> values() const { return values_; }
    double resonance_tol() const { return tol_; }
    const std::vector<std::string>& names() const { return names_; }

    /// <m, omega> for numeric frequencies.
    double pairing(std::span<const int> m) const;

    /// Throws SmallDivisor when |<m, omega>| <= resonance_tol (numeric mode).
    double checked_divisor(std::span<const int> m) const;

private:
    Frequencies() = default;

    FrequencyMode mode_ = FrequencyMode::Symbolic;
    int n_ = 0;
    std::vector<double> values_;
    std::vector<std::string> names_;
    double tol_ = 1e-9;
};

}  // namespace bnf
