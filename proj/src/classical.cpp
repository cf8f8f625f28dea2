#include "bnf/classical.hpp"

#include <cmath>

namespace bnf {

namespace {

std::optional<mpz_class> exact_sqrt(const mpz_class& v) {
    mpz_class r;
    if (mpz_root(r.get_mpz_t(), v.get_mpz_t(), 2) == 0) return std::nullopt;
    return r;
}

}  // namespace

ExactQuadraticNormalization normalize_quadratic_exact(const std::vector<mpq_class>& u, const PotentialJet& jet) {
    if (static_cast<int>(u.size()) != jet.dim()) throw ValidationError("normalize_quadratic: dimension mismatch");
    ExactQuadraticNormalization out{{}, {}, PotentialJet(jet.dim(), jet.max_half_degree())};
    for (const auto& ui : u) {
        if (sgn(ui) <= 0) throw ValidationError("normalize_quadratic: Hessian entries must be positive");
        // Only lambda^2 = u^{-1/2} enters the even jet, so sqrt(u) must be rational.
        auto rn = exact_sqrt(ui.get_num());
        auto rd = exact_sqrt(ui.get_den());
        if (!rn || !rd) {
            throw NonRepresentableScaling("u = " + ui.get_str() + " has no rational square root");
        }
        mpq_class q(*rn, *rd);
        q.canonicalize();
        out.omega.push_back(q);
        out.lambda_squared.push_back(1 / q);
    }
    for (const auto& [k, c] : jet.terms()) {
        mpq_class scaled = c;
        for (int i = 0; i < jet.dim(); ++i) {
            for (int p = 0; p < k[i]; ++p) scaled *= out.lambda_squared[static_cast<std::size_t>(i)];
        }
        out.jet.set(k, scaled);
    }
    return out;
}

QuadraticNormalization normalize_quadratic(const std::vector<double>& u, const NumericPotentialJet& jet) {
    if (static_cast<int>(u.size()) != jet.dim()) throw ValidationError("normalize_quadratic: dimension mismatch");
    QuadraticNormalization out{{}, {}, NumericPotentialJet(jet.dim(), jet.max_half_degree())};
    for (double ui : u) {
        if (!(ui > 0.0)) throw ValidationError("normalize_quadratic: Hessian entries must be positive");
        out.omega.push_back(std::sqrt(ui));
        out.lambda.push_back(std::pow(ui, -0.25));
    }
    for (const auto& [k, c] : jet.terms()) {
        double scaled = c;
        for (int i = 0; i < jet.dim(); ++i) scaled *= std::pow(out.lambda[static_cast<std::size_t>(i)], 2 * k[i]);
        out.jet.set(k, scaled);
    }
    return out;
}

NumericPotentialJet denormalize_jet(const std::vector<double>& lambda, const NumericPotentialJet& jet) {
    if (static_cast<int>(lambda.size()) != jet.dim()) throw ValidationError("denormalize_jet: dimension mismatch");
    NumericPotentialJet out(jet.dim(), jet.max_half_degree());
    for (const auto& [k, c] : jet.terms()) {
        double scaled = c;
        for (int i = 0; i < jet.dim(); ++i) scaled /= std::pow(lambda[static_cast<std::size_t>(i)], 2 * k[i]);
        out.set(k, scaled);
    }
    return out;
}

}  // namespace bnf
