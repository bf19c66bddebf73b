#include "kvd/sfun.hpp"

#include <algorithm>
#include <limits>

#include "kvd/errors.hpp"
#include "numeric.hpp"

namespace kvd {

using namespace detail;

std::string_view to_string(CaseKind kind) {
    switch (kind) {
        case CaseKind::I: return "I";
        case CaseKind::II: return "II";
        case CaseKind::III: return "III";
        case CaseKind::IV: return "IV";
    }
    return "?";
}

CaseKind parse_case(std::string_view text) {
    if (text == "I" || text == "1") return CaseKind::I;
    if (text == "II" || text == "2") return CaseKind::II;
    if (text == "III" || text == "3") return CaseKind::III;
    if (text == "IV" || text == "4") return CaseKind::IV;
    throw ConfigError("unknown case '" + std::string(text) + "' (expected I, II, III or IV)");
}

TruncationPolicy TruncationPolicy::for_digits(int digits10) {
    TruncationPolicy p;
    if (digits10 > 20) {
        p.target_rel_err = std::pow(10.0, -(digits10 - 5));
        p.pole_floor = 1e-12;
        p.product_terms = 20000;
        p.quadrature_points = 3;
    }
    return p;
}

void TruncationPolicy::validate(int digits10) const {
    // Roughly the unit roundoff of a type carrying digits10 decimal digits.
    const double eps = std::pow(10.0, -(digits10 + 1));
    if (product_terms < 1) throw ConfigError("policy.product_terms: must be >= 1");
    if (quadrature_points < 1) throw ConfigError("policy.quadrature_points: must be >= 1");
    if (!(quadrature_cutoff > 0)) throw ConfigError("policy.quadrature_cutoff: must be positive");
    if (!(target_rel_err > eps))
        throw ConfigError("policy.target_rel_err: must exceed the working precision 1e-" +
                          std::to_string(digits10 + 1));
    if (!(target_rel_err < 1e-3)) throw ConfigError("policy.target_rel_err: must be below 1e-3");
    if (!(pole_floor > 0)) throw ConfigError("policy.pole_floor: must be positive");
    if (!(max_nome > 0 && max_nome < 1)) throw ConfigError("policy.max_nome: must lie in (0,1)");
}

template <class R>
CaseParams<R> CaseParams<R>::rational() {
    CaseParams c;
    c.kind = CaseKind::I;
    c.rho = 0;
    c.omega = {cplx<R>(0)};
    c.eps = {1};
    c.xi = {0};
    return c;
}

template <class R>
CaseParams<R> CaseParams<R>::trigonometric(R r) {
    if (!(r > 0)) throw ConfigError("case II: r must be positive");
    CaseParams c;
    c.kind = CaseKind::II;
    c.r = r;
    c.rho = 1;
    c.omega = {cplx<R>(0), cplx<R>(pi<R>() / r)};
    c.eps = {1, -1};
    c.xi = {0, 0};
    return c;
}

template <class R>
CaseParams<R> CaseParams<R>::hyperbolic(R a) {
    if (!(a > 0)) throw ConfigError("case III: a must be positive");
    CaseParams c;
    c.kind = CaseKind::III;
    c.a = a;
    c.rho = 1;
    c.omega = {cplx<R>(0), cplx<R>(R(0), a)};
    c.eps = {1, -1};
    c.xi = {0, 0};
    return c;
}

template <class R>
CaseParams<R> CaseParams<R>::elliptic(R r, R a, double max_nome) {
    if (!(r > 0)) throw ConfigError("case IV: r must be positive");
    if (!(a > 0)) throw ConfigError("case IV: a must be positive");
    if (!(to_double(exp(-r * a)) <= max_nome))
        throw ConfigError("case IV: nome exp(-r a) exceeds max_nome " + std::to_string(max_nome));
    CaseParams c;
    c.kind = CaseKind::IV;
    c.r = r;
    c.a = a;
    c.rho = 3;
    const cplx<R> w1(pi<R>() / r, R(0));
    const cplx<R> w2(R(0), a);
    c.omega = {cplx<R>(0), w1, w2, -w1 - w2};
    c.eps = {1, -1, -1, -1};
    c.xi = {0, 0, -1, 1};
    return c;
}

template <class R>
CaseParams<R> CaseParams<R>::make(CaseKind kind, R r, R a, double max_nome) {
    switch (kind) {
        case CaseKind::I: return rational();
        case CaseKind::II: return trigonometric(r);
        case CaseKind::III: return hyperbolic(a);
        case CaseKind::IV: return elliptic(r, a, max_nome);
    }
    throw ConfigError("unknown case");
}

template <class R>
R CaseParams<R>::nome() const {
    return exp(-r * a);
}

template <class R>
cplx<R> CaseParams<R>::tau() const {
    return cplx<R>(R(0), r * a / pi<R>());
}

template <class R>
cplx<R> CaseParams<R>::omega_sum() const {
    cplx<R> t(0);
    for (const auto& w : omega) t += w;
    return t;
}

template <class R>
cplx<R> CaseParams<R>::half_period_prefactor(const TruncationPolicy& policy) const {
    cplx<R> p(1);
    for (int nu = 1; nu <= rho; ++nu) p *= s_eval(*this, omega[nu] / R(2), policy);
    return p * p / R(4);
}

template <class R>
cplx<R> theta_eval(const cplx<R>& z, const cplx<R>& tau, const TruncationPolicy& policy) {
    if (!(tau.imag() > 0)) throw ConfigError("theta_eval: Im(tau) must be positive");
    const R p = pi<R>();
    const cplx<R> ipt = mul_i<R>(tau) * p;
    // Move z into the fundamental cell: |Im z0| <= pi Im(tau)/2, |Re z0| <= pi/2.
    const long k = nearest_int<R>(z.imag() / (p * tau.imag()));
    cplx<R> z0 = z - tau * (p * R(k));
    const long j = nearest_int<R>(z0.real() / p);
    z0 -= cplx<R>(p * R(j), R(0));
    if (z0 == cplx<R>(0)) return cplx<R>(0);

    const R y = abs(z0.imag());
    const R log_absq = -p * tau.imag();
    const R target = R(policy.target_rel_err);
    cplx<R> sum(0);
    for (int n = 0;; ++n) {
        const R h = R(n) + R(0.5);
        cplx<R> term = exp(ipt * (h * h)) * sin(z0 * R(2 * n + 1));
        sum += (n % 2 == 0) ? term : -term;
        const R h1 = h + R(1);
        const R next = exp(log_absq * h1 * h1 + R(2 * n + 3) * y);
        const R ratio = exp(log_absq * R(2 * n + 3));
        if (next <= target * abs(sum) * (R(1) - ratio)) break;
        if (n >= policy.product_terms)
            throw DomainError("theta_eval: series did not converge within product_terms");
    }
    // theta(z0 + k pi tau + j pi) = (-1)^{k+j} exp(-i pi tau k^2 - 2 i k z0) theta(z0)
    const cplx<R> log_factor = -ipt * R(k * k) - mul_i<R>(z0) * R(2 * k);
    cplx<R> out = R(2) * sum * exp(log_factor);
    if ((k + j) % 2 != 0) out = -out;
    return out;
}

template <class R>
cplx<R> theta_product(const cplx<R>& z, const cplx<R>& tau, const TruncationPolicy& policy) {
    if (!(tau.imag() > 0)) throw ConfigError("theta_product: Im(tau) must be positive");
    const R p = pi<R>();
    const cplx<R> ipt = mul_i<R>(tau) * p;
    const cplx<R> q = exp(ipt);
    const cplx<R> q2 = q * q;
    const R absq2 = abs(q2);
    const cplx<R> c2 = cos(z * R(2));
    const R growth = R(3) + R(2) * abs(c2);
    const R target = R(policy.target_rel_err);
    cplx<R> prod(1);
    cplx<R> q2n(1);
    for (int n = 1;; ++n) {
        q2n *= q2;
        prod *= (cplx<R>(1) - q2n) * (cplx<R>(1) - R(2) * q2n * c2 + q2n * q2n);
        const R tail = abs(q2n) * absq2 * growth / (R(1) - absq2);
        if (tail <= target) break;
        if (n >= policy.product_terms)
            throw DomainError("theta_product: product did not converge within product_terms");
    }
    return R(2) * exp(ipt / R(4)) * sin(z) * prod;
}

template <class R>
cplx<R> s_eval(const CaseParams<R>& cs, const cplx<R>& x, const TruncationPolicy& policy) {
    switch (cs.kind) {
        case CaseKind::I: return x;
        case CaseKind::II: return sin(x * cs.r) / cs.r;
        case CaseKind::III: return sinh(x * (pi<R>() / cs.a)) * (cs.a / pi<R>());
        case CaseKind::IV:
            return theta_eval<R>(x * cs.r, cs.tau(), policy) * (exp(cs.r * cs.a / R(4)) / cs.r);
    }
    return cplx<R>(0);
}

template <class R>
cplx<R> quasi_factor(const CaseParams<R>& cs, int nu, const cplx<R>& x) {
    if (nu < 0 || nu > cs.rho)
        throw ConfigError("quasi_factor: index " + std::to_string(nu) + " outside 0.." +
                          std::to_string(cs.rho));
    if (cs.xi[nu] == 0) return cplx<R>(R(cs.eps[nu]));
    const cplx<R> arg = mul_i<R>(x + cs.omega[nu] / R(2)) * (R(2) * cs.r * R(cs.xi[nu]));
    return exp(arg) * R(cs.eps[nu]);
}

template <class R>
R lattice_distance(const CaseParams<R>& cs, const cplx<R>& x) {
    switch (cs.kind) {
        case CaseKind::I: return abs(x);
        case CaseKind::II: {
            const R w = pi<R>() / cs.r;
            const long n = nearest_int<R>(x.real() / w);
            return abs(x - cplx<R>(w * R(n), R(0)));
        }
        case CaseKind::III: {
            const long n = nearest_int<R>(x.imag() / cs.a);
            return abs(x - cplx<R>(R(0), cs.a * R(n)));
        }
        case CaseKind::IV: {
            // Rectangular lattice: rounding each coordinate gives the nearest point.
            const R w = pi<R>() / cs.r;
            const long n1 = nearest_int<R>(x.real() / w);
            const long n2 = nearest_int<R>(x.imag() / cs.a);
            return abs(x - cplx<R>(w * R(n1), cs.a * R(n2)));
        }
    }
    return R(0);
}

template <class R>
cplx<R> duplication_residual(const CaseParams<R>& cs, const cplx<R>& x,
                             const TruncationPolicy& policy) {
    if (lattice_distance(cs, x * R(2)) < R(policy.pole_floor))
        throw DomainError("duplication_residual: x is within pole_floor of a half-period");
    cplx<R> num(2);
    for (int nu = 0; nu <= cs.rho; ++nu) num *= s_eval(cs, x - cs.omega[nu] / R(2), policy);
    cplx<R> den(1);
    for (int nu = 1; nu <= cs.rho; ++nu) den *= s_eval(cs, -cs.omega[nu] / R(2), policy);
    return s_eval(cs, x * R(2), policy) - num / den;
}

#define KVD_INSTANTIATE(R)                                                                   \
    template struct CaseParams<R>;                                                           \
    template cplx<R> theta_eval<R>(const cplx<R>&, const cplx<R>&, const TruncationPolicy&); \
    template cplx<R> theta_product<R>(const cplx<R>&, const cplx<R>&,                        \
                                      const TruncationPolicy&);                              \
    template cplx<R> s_eval<R>(const CaseParams<R>&, const cplx<R>&, const TruncationPolicy&); \
    template cplx<R> quasi_factor<R>(const CaseParams<R>&, int, const cplx<R>&);             \
    template R lattice_distance<R>(const CaseParams<R>&, const cplx<R>&);                    \
    template cplx<R> duplication_residual<R>(const CaseParams<R>&, const cplx<R>&,           \
                                             const TruncationPolicy&);

KVD_INSTANTIATE(double)
KVD_INSTANTIATE(ext_real)

}  // namespace kvd
