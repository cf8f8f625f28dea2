#include "bnf/frequencies.hpp"

#include <cmath>
#include <sstream>

#include "bnf/errors.hpp"
#include "bnf/exact_scalar.hpp"

namespace bnf {

Frequencies Frequencies::symbolic(int n) {
    if (n < 1 || n > kMaxDim) throw ValidationError("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    Frequencies f;
    f.mode_ = FrequencyMode::Symbolic;
    f.n_ = n;
    for (int i = 0; i < n; ++i) f.names_.push_back("w" + std::to_string(i + 1));
    return f;
}

Frequencies Frequencies::numeric(std::vector<double> values, double resonance_tol) {
    const int n = static_cast<int>(values.size());
    if (n < 1 || n > kMaxDim) throw ValidationError("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    if (!(resonance_tol > 0.0)) throw ValidationError("resonance tolerance must be positive");
    for (int i = 0; i < n; ++i) {
        if (!(values[i] > 0.0) || !std::isfinite(values[i])) throw ValidationError("frequencies must be positive");
        for (int j = 0; j < i; ++j) {
            if (values[i] == values[j]) throw ValidationError("frequencies must be pairwise distinct");
        }
    }
    Frequencies f;
    f.mode_ = FrequencyMode::Numeric;
    f.n_ = n;
    f.values_ = std::move(values);
    f.tol_ = resonance_tol;
    return f;
}

double Frequencies::pairing(std::span<const int> m) const {
    if (is_symbolic()) throw ValidationError("numeric pairing requested for symbolic frequencies");
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += m[static_cast<std::size_t>(i)] * values_[static_cast<std::size_t>(i)];
    return s;
}

double Frequencies::checked_divisor(std::span<const int> m) const {
    const double d = pairing(m);
    if (std::abs(d) <= tol_) {
        std::ostringstream os;
        os << "small divisor |<omega, m>| = " << std::abs(d) << " <= " << tol_ << " for m = (";
        for (int i = 0; i < n_; ++i) os << (i ? "," : "") << m[static_cast<std::size_t>(i)];
        os << ")";
        throw SmallDivisor(os.str());
    }
    return d;
}

}  // namespace bnf
