#include "bnf/inverse.hpp"

namespace bnf {

mpq_class diagonal_weight(const MultiIndex& k) {
    mpq_class w(1);
    for (int i = 0; i < kMaxDim; ++i) {
        if (k[i] == 0) continue;
        mpz_class num = detail::binomial(2 * k[i], k[i]);
        mpz_class den;
        mpz_ui_pow_ui(den.get_mpz_t(), 4, static_cast<unsigned long>(k[i]));
        w *= mpq_class(num, den);
    }
    w.canonicalize();
    return w;
}

}  // namespace bnf
