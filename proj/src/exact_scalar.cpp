#include "bnf/exact_scalar.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "bnf/errors.hpp"

namespace bnf {

GaussianRational& GaussianRational::operator*=(const GaussianRational& o) {
    if (sgn(im) == 0 && sgn(o.im) == 0) {
        re *= o.re;
        return *this;
    }
    mpq_class r = re * o.re - im * o.im;
    mpq_class i = re * o.im + im * o.re;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

namespace {

// Divisibility by a linear form is first tested by evaluating at a point of
// its zero set modulo a prime; a nonzero value rules it out cheaply.
constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % kPrime);
}

std::uint64_t pow_mod(std::uint64_t a, std::uint64_t e) {
    std::uint64_t r = 1;
    while (e > 0) {
        if (e & 1) r = mul_mod(r, a);
        a = mul_mod(a, a);
        e >>= 1;
    }
    return r;
}

std::uint64_t int_mod(long v) {
    long r = v % static_cast<long>(kPrime);
    return static_cast<std::uint64_t>(r < 0 ? r + static_cast<long>(kPrime) : r);
}

std::uint64_t mpz_mod(const mpz_class& z) { return mpz_fdiv_ui(z.get_mpz_t(), kPrime); }

constexpr std::array<std::uint64_t, kMaxDim> kProbe = {
    0x1d3f6a2b9c4e5f17ULL % kPrime, 0x0a9b8c7d6e5f4a31ULL % kPrime, 0x13579bdf2468ace1ULL % kPrime,
    0x0fedcba987654323ULL % kPrime, 0x02718281828459afULL % kPrime, 0x0314159265358979ULL % kPrime};

bool vanishes_on_hyperplane(const OmegaPoly::Terms& terms, std::span<const int> m, std::size_t lead) {
    std::array<std::uint64_t, kMaxDim> point = kProbe;
    std::uint64_t rest = 0;
    for (std::size_t j = 0; j < m.size(); ++j) {
        if (j == lead || m[j] == 0) continue;
        rest = (rest + mul_mod(int_mod(m[j]), point[j])) % kPrime;
    }
    // m_lead x_lead + rest = 0
    const std::uint64_t inv = pow_mod(int_mod(m[lead]), kPrime - 2);
    point[lead] = mul_mod((kPrime - rest) % kPrime, inv);

    std::uint64_t re = 0, im = 0;
    for (const auto& [e, c] : terms) {
        std::uint64_t mono = 1;
        for (int j = 0; j < kMaxDim; ++j) {
            if (e[j] != 0) mono = mul_mod(mono, pow_mod(point[j], e[j]));
        }
        if (sgn(c.re) != 0) re = (re + mul_mod(mpz_mod(c.re), mono)) % kPrime;
        if (sgn(c.im) != 0) im = (im + mul_mod(mpz_mod(c.im), mono)) % kPrime;
    }
    return re == 0 && im == 0;
}

bool divides_exactly(const mpz_class& a, const GaussianInteger& c) {
    return mpz_divisible_p(c.re.get_mpz_t(), a.get_mpz_t()) && mpz_divisible_p(c.im.get_mpz_t(), a.get_mpz_t());
}

}  // namespace

// ---------------------------------------------------------------- OmegaPoly

OmegaPoly OmegaPoly::constant(GaussianInteger c) {
    OmegaPoly p;
    if (!c.is_zero()) p.terms_.emplace_back(OmegaExponent{}, std::move(c));
    return p;
}

OmegaPoly OmegaPoly::monomial(const OmegaExponent& e, GaussianInteger c) {
    OmegaPoly p;
    if (!c.is_zero()) p.terms_.emplace_back(e, std::move(c));
    return p;
}

OmegaPoly OmegaPoly::linear(std::span<const int> m) {
    OmegaPoly p;
    for (std::size_t i = m.size(); i-- > 0;) {
        if (m[i] == 0) continue;
        OmegaExponent e{};
        e[i] = 1;
        p.terms_.emplace_back(e, GaussianInteger{mpz_class(m[i]), mpz_class(0)});
    }
    return p;
}

bool OmegaPoly::is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.front().first == OmegaExponent{});
}

int OmegaPoly::total_degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, std::accumulate(e.begin(), e.end(), 0));
    return d;
}

void OmegaPoly::normalize() {
    std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) { return a.first < b.first; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < terms_.size();) {
        std::size_t j = i + 1;
        Term acc = std::move(terms_[i]);
        for (; j < terms_.size() && terms_[j].first == acc.first; ++j) {
            acc.second.re += terms_[j].second.re;
            acc.second.im += terms_[j].second.im;
        }
        if (!acc.second.is_zero()) terms_[out++] = std::move(acc);
        i = j;
    }
    terms_.resize(out);
}

OmegaPoly& OmegaPoly::operator+=(const OmegaPoly& o) {
    if (o.terms_.empty()) return *this;
    Terms merged;
    merged.reserve(terms_.size() + o.terms_.size());
    std::size_t i = 0, j = 0;
    while (i < terms_.size() || j < o.terms_.size()) {
        if (j == o.terms_.size() || (i < terms_.size() && terms_[i].first < o.terms_[j].first)) {
            merged.push_back(std::move(terms_[i++]));
        } else if (i == terms_.size() || o.terms_[j].first < terms_[i].first) {
            merged.push_back(o.terms_[j++]);
        } else {
            Term t = std::move(terms_[i++]);
            t.second.re += o.terms_[j].second.re;
            t.second.im += o.terms_[j].second.im;
            ++j;
            if (!t.second.is_zero()) merged.push_back(std::move(t));
        }
    }
    terms_ = std::move(merged);
    return *this;
}

OmegaPoly& OmegaPoly::operator-=(const OmegaPoly& o) {
    OmegaPoly neg = o;
    neg.negate();
    return *this += neg;
}

void OmegaPoly::mul_integer(const mpz_class& k) {
    if (sgn(k) == 0) {
        terms_.clear();
        return;
    }
    if (k == 1) return;
    for (auto& [e, c] : terms_) {
        c.re *= k;
        c.im *= k;
    }
}

void OmegaPoly::mul_gaussian(const GaussianInteger& g) {
    if (g.is_zero()) {
        terms_.clear();
        return;
    }
    for (auto& [e, c] : terms_) {
        mpz_class r = c.re * g.re - c.im * g.im;
        mpz_class i = c.re * g.im + c.im * g.re;
        c.re = std::move(r);
        c.im = std::move(i);
    }
}

void OmegaPoly::mul_i() {
    for (auto& [e, c] : terms_) {
        std::swap(c.re, c.im);
        c.re = -c.re;
    }
}

void OmegaPoly::negate() {
    for (auto& [e, c] : terms_) {
        c.re = -c.re;
        c.im = -c.im;
    }
}

void OmegaPoly::divexact(const mpz_class& k) {
    if (k == 1) return;
    for (auto& [e, c] : terms_) {
        mpz_divexact(c.re.get_mpz_t(), c.re.get_mpz_t(), k.get_mpz_t());
        mpz_divexact(c.im.get_mpz_t(), c.im.get_mpz_t(), k.get_mpz_t());
    }
}

OmegaPoly operator*(const OmegaPoly& a, const OmegaPoly& b) {
    OmegaPoly out;
    if (a.is_zero() || b.is_zero()) return out;
    out.terms_.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& [ea, ca] : a.terms_) {
        for (const auto& [eb, cb] : b.terms_) {
            OmegaExponent e{};
            for (int i = 0; i < kMaxDim; ++i) e[i] = static_cast<std::uint8_t>(ea[i] + eb[i]);
            GaussianInteger c;
            if (sgn(ca.im) == 0 && sgn(cb.im) == 0) {
                c.re = ca.re * cb.re;
            } else {
                c.re = ca.re * cb.re - ca.im * cb.im;
                c.im = ca.re * cb.im + ca.im * cb.re;
            }
            out.terms_.emplace_back(e, std::move(c));
        }
    }
    out.normalize();
    return out;
}

OmegaPoly OmegaPoly::mul_linear(std::span<const int> m) const {
    OmegaPoly out;
    out.terms_.reserve(terms_.size() * 2);
    for (const auto& [e, c] : terms_) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (m[j] == 0) continue;
            OmegaExponent ej = e;
            ej[j] += 1;
            out.terms_.emplace_back(ej, GaussianInteger{c.re * m[j], c.im * m[j]});
        }
    }
    out.normalize();
    return out;
}

mpz_class OmegaPoly::content() const {
    mpz_class g;
    for (const auto& [e, c] : terms_) {
        mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.re.get_mpz_t());
        mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.im.get_mpz_t());
        if (g == 1) break;
    }
    return g;
}

OmegaPoly OmegaPoly::conj() const {
    OmegaPoly out = *this;
    for (auto& [e, c] : out.terms_) c.im = -c.im;
    return out;
}

std::complex<double> OmegaPoly::evaluate(std::span<const double> omega, const mpq_class& scale) const {
    std::complex<double> sum = 0.0;
    for (const auto& [e, c] : terms_) {
        double mono = 1.0;
        for (std::size_t i = 0; i < omega.size(); ++i) {
            for (int p = 0; p < e[i]; ++p) mono *= omega[i];
        }
        const mpq_class re = scale * c.re;
        const mpq_class im = scale * c.im;
        sum += std::complex<double>(re.get_d(), im.get_d()) * mono;
    }
    return sum;
}

std::optional<OmegaPoly> OmegaPoly::divide_linear(std::span<const int> m) const {
    std::size_t lead = 0;
    while (lead < m.size() && m[lead] == 0) ++lead;
    if (lead == m.size()) throw ResonantInput("division by the zero linear form");
    if (terms_.empty()) return OmegaPoly{};
    if (is_constant()) return std::nullopt;
    if (!vanishes_on_hyperplane(terms_, m, lead)) return std::nullopt;

    // Write N = sum_k c_k x^k in the leading variable x and solve
    // (a x + g) sum_k q_k x^k = N from the top coefficient down.
    int top = 0;
    for (const auto& [e, c] : terms_) top = std::max(top, static_cast<int>(e[lead]));
    if (top == 0) return std::nullopt;
    std::vector<OmegaPoly> coeff(static_cast<std::size_t>(top) + 1);
    for (const auto& [e, c] : terms_) {
        OmegaExponent rest = e;
        rest[lead] = 0;
        coeff[e[lead]].terms_.emplace_back(rest, c);
    }
    std::array<int, kMaxDim> tail{};
    for (std::size_t j = lead + 1; j < m.size(); ++j) tail[j] = m[j];
    const std::span<const int> g(tail.data(), m.size());
    const mpz_class a(m[lead]);

    auto exact_div = [&](OmegaPoly p) -> std::optional<OmegaPoly> {
        for (const auto& [e, c] : p.terms_) {
            if (!divides_exactly(a, c)) return std::nullopt;
        }
        p.divexact(a);
        return p;
    };

    std::vector<OmegaPoly> quot(static_cast<std::size_t>(top));
    auto q = exact_div(coeff[static_cast<std::size_t>(top)]);
    if (!q) return std::nullopt;
    quot[static_cast<std::size_t>(top - 1)] = std::move(*q);
    for (int k = top - 1; k >= 1; --k) {
        OmegaPoly t = coeff[static_cast<std::size_t>(k)];
        t -= quot[static_cast<std::size_t>(k)].mul_linear(g);
        q = exact_div(std::move(t));
        if (!q) return std::nullopt;
        quot[static_cast<std::size_t>(k - 1)] = std::move(*q);
    }
    if (!(quot[0].mul_linear(g) == coeff[0])) return std::nullopt;

    OmegaPoly out;
    for (int k = 0; k < top; ++k) {
        for (auto& [e, c] : quot[static_cast<std::size_t>(k)].terms_) {
            OmegaExponent full = e;
            full[lead] = static_cast<std::uint8_t>(k);
            out.terms_.emplace_back(full, std::move(c));
        }
    }
    out.normalize();
    return out;
}

// ---------------------------------------------------------------- LinearForm

std::pair<LinearForm, int> LinearForm::canonical(std::span<const int> m) {
    if (m.size() > static_cast<std::size_t>(kMaxDim)) throw ValidationError("linear form exceeds kMaxDim");
    int g = 0;
    int lead = 0;
    for (int v : m) {
        g = std::gcd(g, v);
        if (lead == 0 && v != 0) lead = v;
    }
    if (g == 0) throw ResonantInput("linear form <m, omega> with m = 0");
    const int scale = lead > 0 ? g : -g;
    LinearForm f;
    for (std::size_t i = 0; i < m.size(); ++i) f.m_[i] = m[i] / scale;
    return {f, scale};
}

double LinearForm::evaluate(std::span<const double> omega) const {
    double s = 0.0;
    for (std::size_t i = 0; i < omega.size(); ++i) s += m_[i] * omega[i];
    return s;
}

FormMultiset merge_forms(const FormMultiset& a, const FormMultiset& b) {
    FormMultiset out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

namespace {

// Multiset maximum of two sorted multisets.
FormMultiset form_lcm(const FormMultiset& a, const FormMultiset& b) {
    FormMultiset out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

FormMultiset form_difference(const FormMultiset& a, const FormMultiset& b) {
    FormMultiset out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

OmegaPoly times_forms(OmegaPoly p, const FormMultiset& forms) {
    for (const auto& f : forms) p = p.mul_linear(f.coeffs());
    return p;
}

mpz_class lcm(const mpz_class& a, const mpz_class& b) {
    mpz_class r;
    mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

// q * (R + iI) / d with R, I coprime integers and d > 0: the integer form of
// a Gaussian rational.
struct ClearedGaussian {
    GaussianInteger unit;
    mpq_class scale;
};

ClearedGaussian clear_denominators(const GaussianRational& c) {
    const mpz_class d = lcm(c.re.get_den(), c.im.get_den());
    mpz_class r = c.re.get_num() * (d / c.re.get_den());
    mpz_class i = c.im.get_num() * (d / c.im.get_den());
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), i.get_mpz_t());
    mpz_divexact(r.get_mpz_t(), r.get_mpz_t(), g.get_mpz_t());
    mpz_divexact(i.get_mpz_t(), i.get_mpz_t(), g.get_mpz_t());
    mpq_class s(g, d);
    s.canonicalize();
    return {{std::move(r), std::move(i)}, std::move(s)};
}

}  // namespace

// ---------------------------------------------------------------- Shadow

namespace {

std::uint64_t add_mod(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = a + b;
    return r >= kPrime ? r - kPrime : r;
}

std::uint64_t neg_mod(std::uint64_t a) { return a == 0 ? 0 : kPrime - a; }

// qa Na + qb Nb = s * P with P integral.
std::pair<mpq_class, OmegaPoly> combine(const mpq_class& qa, OmegaPoly na, const mpq_class& qb, OmegaPoly nb) {
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), qa.get_num_mpz_t(), qb.get_num_mpz_t());
    const mpz_class d = lcm(qa.get_den(), qb.get_den());
    na.mul_integer((qa.get_num() / g) * (d / qa.get_den()));
    nb.mul_integer((qb.get_num() / g) * (d / qb.get_den()));
    na += nb;
    mpq_class s(g, d);
    s.canonicalize();
    return {std::move(s), std::move(na)};
}

// q mod p, or nullopt when p divides the denominator.
std::optional<std::uint64_t> rational_mod(const mpq_class& q) {
    const std::uint64_t d = mpz_mod(q.get_den());
    if (d == 0) return std::nullopt;
    return mul_mod(mpz_mod(q.get_num()), pow_mod(d, kPrime - 2));
}

}  // namespace

Shadow& Shadow::operator+=(const Shadow& o) {
    valid = valid && o.valid;
    re = add_mod(re, o.re);
    im = add_mod(im, o.im);
    return *this;
}

Shadow& Shadow::operator*=(const Shadow& o) {
    valid = valid && o.valid;
    const std::uint64_t r = add_mod(mul_mod(re, o.re), neg_mod(mul_mod(im, o.im)));
    const std::uint64_t i = add_mod(mul_mod(re, o.im), mul_mod(im, o.re));
    re = r;
    im = i;
    return *this;
}

Shadow Shadow::conj() const { return {re, neg_mod(im), valid}; }

Shadow Shadow::inverse() const {
    // p = 3 mod 4, so a^2 + b^2 vanishes only at a = b = 0.
    const std::uint64_t norm = add_mod(mul_mod(re, re), mul_mod(im, im));
    if (norm == 0) return {0, 0, false};
    const std::uint64_t inv = pow_mod(norm, kPrime - 2);
    return {mul_mod(re, inv), mul_mod(neg_mod(im), inv), valid};
}

Shadow Shadow::of(const GaussianRational& c) {
    auto r = rational_mod(c.re);
    auto i = rational_mod(c.im);
    if (!r || !i) return {0, 0, false};
    return {*r, *i, true};
}

Shadow Shadow::of_form(std::span<const int> m) {
    std::uint64_t v = 0;
    for (std::size_t j = 0; j < m.size(); ++j) {
        if (m[j] != 0) v = add_mod(v, mul_mod(int_mod(m[j]), kProbe[j]));
    }
    return {v, 0, true};
}

Shadow Shadow::of(const ExactFraction& f) {
    if (f.is_zero()) return {};
    auto q = rational_mod(f.scale);
    if (!q) return {0, 0, false};
    Shadow s{0, 0, true};
    for (const auto& [e, c] : f.num.terms()) {
        std::uint64_t mono = 1;
        for (int j = 0; j < kMaxDim; ++j) {
            if (e[j] != 0) mono = mul_mod(mono, pow_mod(kProbe[j], e[j]));
        }
        s.re = add_mod(s.re, mul_mod(mpz_mod(c.re), mono));
        s.im = add_mod(s.im, mul_mod(mpz_mod(c.im), mono));
    }
    s *= Shadow{*q, 0, true};
    for (const auto& form : f.den) s *= of_form(form.coeffs()).inverse();
    return s;
}

// ---------------------------------------------------------------- ExactFraction

namespace {

void normalize_sign(ExactFraction& f) {
    if (f.num.is_zero()) return;
    const auto& c = f.num.terms().front().second;
    if (sgn(c.re) < 0 || (sgn(c.re) == 0 && sgn(c.im) < 0)) {
        f.num.negate();
        f.scale = -f.scale;
    }
}

void extract_content(ExactFraction& f) {
    mpz_class c = f.num.content();
    if (c != 1) {
        f.num.divexact(c);
        f.scale *= c;
    }
}

void reduce(ExactFraction& f) {
    auto& den = f.den;
    std::size_t i = 0;
    while (i < den.size()) {
        auto q = f.num.divide_linear(den[i].coeffs());
        if (q) {
            f.num = std::move(*q);
            den.erase(den.begin() + static_cast<std::ptrdiff_t>(i));
            continue;
        }
        // Skip the remaining copies of a form that does not divide.
        const LinearForm form = den[i];
        while (i < den.size() && den[i] == form) ++i;
    }
    normalize_sign(f);
}

}  // namespace

ExactFraction ExactFraction::make(mpq_class scale, OmegaPoly num, FormMultiset den) {
    if (num.is_zero() || sgn(scale) == 0) return {};
    ExactFraction f{std::move(scale), std::move(num), std::move(den)};
    std::sort(f.den.begin(), f.den.end());
    extract_content(f);
    reduce(f);
    return f;
}

std::string ExactFraction::to_string() const {
    if (is_zero()) return "0";
    std::ostringstream os;
    os << scale.get_str() << "*(";
    bool first = true;
    for (const auto& [e, c] : num.terms()) {
        if (!first) os << " + ";
        first = false;
        if (sgn(c.im) == 0) {
            os << c.re.get_str();
        } else if (sgn(c.re) == 0) {
            os << c.im.get_str() << "i";
        } else {
            os << "(" << c.re.get_str() << (sgn(c.im) > 0 ? "+" : "") << c.im.get_str() << "i)";
        }
        for (int i = 0; i < kMaxDim; ++i) {
            if (e[i] > 0) os << "*w" << (i + 1) << (e[i] > 1 ? "^" + std::to_string(e[i]) : "");
        }
    }
    os << ")";
    for (const auto& f : den) {
        os << "/(";
        bool lead = true;
        for (int i = 0; i < kMaxDim; ++i) {
            if (f[i] == 0) continue;
            if (!lead && f[i] > 0) os << "+";
            os << f[i] << "*w" << (i + 1);
            lead = false;
        }
        os << ")";
    }
    return os.str();
}

// ---------------------------------------------------------------- ExactScalar

ExactScalar::ExactScalar(const mpq_class& q) {
    if (sgn(q) == 0) return;
    parts_.push_back(ExactFraction{q, OmegaPoly::constant({mpz_class(1), mpz_class(0)}), {}});
    shadow_ = Shadow::of(GaussianRational(q));
}

ExactScalar::ExactScalar(const GaussianRational& c) {
    if (c.is_zero()) return;
    auto cleared = clear_denominators(c);
    ExactFraction f{std::move(cleared.scale), OmegaPoly::constant(std::move(cleared.unit)), {}};
    normalize_sign(f);
    parts_.push_back(std::move(f));
    shadow_ = Shadow::of(c);
}

ExactScalar ExactScalar::from_fraction(ExactFraction f) {
    ExactScalar s;
    f = ExactFraction::make(std::move(f.scale), std::move(f.num), std::move(f.den));
    if (f.is_zero()) return s;
    s.shadow_ = Shadow::of(f);
    s.parts_.push_back(std::move(f));
    return s;
}

ExactScalar ExactScalar::linear_form(std::span<const int> m) {
    return from_fraction(ExactFraction{mpq_class(1), OmegaPoly::linear(m), {}});
}

void ExactScalar::insert(ExactFraction f) {
    if (f.is_zero()) return;
    auto it = std::lower_bound(parts_.begin(), parts_.end(), f.den,
                               [](const ExactFraction& a, const FormMultiset& d) { return a.den < d; });
    if (it == parts_.end() || it->den != f.den) {
        parts_.insert(it, std::move(f));
        return;
    }
    auto [s, p] = combine(it->scale, std::move(it->num), f.scale, std::move(f.num));
    ExactFraction merged = ExactFraction::make(std::move(s), std::move(p), std::move(it->den));
    parts_.erase(it);
    insert(std::move(merged));
}

void ExactScalar::settle() {
    if (parts_.empty()) return;
    if (shadow_.valid && !shadow_.is_zero()) return;
    ExactFraction c = canonical();
    if (c.is_zero()) {
        parts_.clear();
        shadow_ = {};
    } else if (!shadow_.valid) {
        shadow_ = Shadow::of(c);
    }
}

ExactFraction ExactScalar::canonical() const {
    if (parts_.empty()) return {};
    if (parts_.size() == 1) return parts_.front();
    FormMultiset lcd;
    mpz_class common(1);
    for (const auto& f : parts_) {
        lcd = form_lcm(lcd, f.den);
        common = lcm(common, f.scale.get_den());
    }
    OmegaPoly total;
    for (const auto& f : parts_) {
        OmegaPoly p = times_forms(f.num, form_difference(lcd, f.den));
        p.mul_integer(f.scale.get_num() * (common / f.scale.get_den()));
        total += p;
    }
    return ExactFraction::make(mpq_class(1) / common, std::move(total), std::move(lcd));
}

bool ExactScalar::is_real() const {
    if (shadow_.valid && shadow_.im != 0) return false;
    return (*this - conj()).is_zero();
}

std::optional<mpq_class> ExactScalar::as_rational() const {
    if (parts_.empty()) return mpq_class(0);
    ExactFraction c = canonical();
    if (!c.den.empty() || !c.num.is_constant()) return std::nullopt;
    const auto& v = c.num.terms().front().second;
    if (sgn(v.im) != 0) return std::nullopt;
    return c.scale * v.re;
}

ExactScalar ExactScalar::conj() const {
    ExactScalar s;
    s.parts_ = parts_;
    for (auto& f : s.parts_) {
        f.num = f.num.conj();
        normalize_sign(f);
    }
    s.shadow_ = shadow_.conj();
    return s;
}

ExactScalar ExactScalar::div_linear_form(std::span<const int> m) const {
    auto [form, sc] = LinearForm::canonical(m);
    ExactScalar s;
    if (is_zero()) return s;
    for (const auto& part : parts_) {
        ExactFraction f{part.scale / sc, {}, part.den};
        if (auto q = part.num.divide_linear(form.coeffs())) {
            f.num = std::move(*q);
        } else {
            f.num = part.num;
            f.den.insert(std::upper_bound(f.den.begin(), f.den.end(), form), form);
        }
        normalize_sign(f);
        s.insert(std::move(f));
    }
    s.shadow_ = shadow_ * Shadow::of_form(m).inverse();
    s.settle();
    return s;
}

ExactScalar ExactScalar::mul_linear_form(std::span<const int> m) const {
    auto [form, sc] = LinearForm::canonical(m);
    ExactScalar s;
    if (is_zero()) return s;
    for (const auto& part : parts_) {
        ExactFraction f{part.scale * sc, {}, part.den};
        auto it = std::lower_bound(f.den.begin(), f.den.end(), form);
        if (it != f.den.end() && *it == form) {
            f.den.erase(it);
            f.num = part.num;
        } else {
            f.num = part.num.mul_linear(form.coeffs());
        }
        normalize_sign(f);
        s.insert(std::move(f));
    }
    s.shadow_ = shadow_ * Shadow::of_form(m);
    s.settle();
    return s;
}

std::complex<double> ExactScalar::evaluate(std::span<const double> omega) const {
    std::complex<double> total = 0.0;
    for (const auto& f : parts_) {
        std::complex<double> v = f.num.evaluate(omega, f.scale);
        for (const auto& form : f.den) v /= form.evaluate(omega);
        total += v;
    }
    return total;
}

ExactScalar& ExactScalar::operator+=(const ExactScalar& o) {
    if (o.is_zero()) return *this;
    if (is_zero()) return *this = o;
    for (const auto& f : o.parts_) insert(f);
    shadow_ += o.shadow_;
    settle();
    return *this;
}

ExactScalar& ExactScalar::operator-=(const ExactScalar& o) { return *this += -o; }

ExactScalar& ExactScalar::operator*=(const ExactScalar& o) {
    if (is_zero() || o.is_zero()) return *this = ExactScalar();
    ExactAccumulator acc;
    acc.add_product(*this, o, GaussianRational(1));
    return *this = acc.result();
}

ExactScalar& ExactScalar::operator*=(const GaussianRational& c) {
    if (is_zero()) return *this;
    if (c.is_zero()) return *this = ExactScalar();
    if (c.is_real()) {
        for (auto& f : parts_) f.scale *= c.re;
    } else if (sgn(c.re) == 0) {
        for (auto& f : parts_) {
            f.num.mul_i();
            f.scale *= c.im;
            normalize_sign(f);
        }
    } else {
        auto cleared = clear_denominators(c);
        for (auto& f : parts_) {
            f.num.mul_gaussian(cleared.unit);
            f.scale *= cleared.scale;
            extract_content(f);
            normalize_sign(f);
        }
    }
    shadow_ *= Shadow::of(c);
    return *this;
}

// ---------------------------------------------------------------- ExactAccumulator

void ExactAccumulator::add_to_group(FormMultiset forms, OmegaPoly poly, const mpq_class& q,
                                    const GaussianRational& factor) {
    GaussianRational c = factor;
    c.re *= q;
    c.im *= q;
    auto cleared = clear_denominators(c);
    // value = poly * unit * num(scale) / den(scale)
    if (sgn(cleared.unit.im) == 0) {
        poly.mul_integer(cleared.unit.re * cleared.scale.get_num());
    } else if (sgn(cleared.unit.re) == 0) {
        poly.mul_i();
        poly.mul_integer(cleared.unit.im * cleared.scale.get_num());
    } else {
        poly.mul_gaussian(cleared.unit);
        poly.mul_integer(cleared.scale.get_num());
    }
    const mpz_class& d = cleared.scale.get_den();

    auto [it, inserted] = groups_.try_emplace(std::move(forms));
    Group& grp = it->second;
    if (inserted) {
        grp.poly = std::move(poly);
        grp.den = d;
        return;
    }
    if (grp.den == d) {
        grp.poly += poly;
        return;
    }
    const mpz_class l = lcm(grp.den, d);
    grp.poly.mul_integer(l / grp.den);
    poly.mul_integer(l / d);
    grp.poly += poly;
    grp.den = l;
}

void ExactAccumulator::add(const ExactScalar& c) { add_scaled(c, GaussianRational(1)); }

void ExactAccumulator::add_scaled(const ExactScalar& c, const GaussianRational& factor) {
    if (c.is_zero() || factor.is_zero()) return;
    for (const auto& f : c.parts_) add_to_group(f.den, f.num, f.scale, factor);
    shadow_ += c.shadow_ * Shadow::of(factor);
}

void ExactAccumulator::add_product(const ExactScalar& a, const ExactScalar& b, const GaussianRational& factor) {
    if (a.is_zero() || b.is_zero() || factor.is_zero()) return;
    for (const auto& fa : a.parts_) {
        for (const auto& fb : b.parts_) {
            add_to_group(merge_forms(fa.den, fb.den), fa.num * fb.num, fa.scale * fb.scale, factor);
        }
    }
    shadow_ += a.shadow_ * b.shadow_ * Shadow::of(factor);
}

ExactScalar ExactAccumulator::result() const {
    ExactScalar out;
    for (const auto& [den, grp] : groups_) {
        if (grp.poly.is_zero()) continue;
        out.insert(ExactFraction::make(mpq_class(1) / grp.den, grp.poly, den));
    }
    out.shadow_ = shadow_;
    out.settle();
    return out;
}

}  // namespace bnf
