#include "kvd/gamma.hpp"

#include <array>
#include <type_traits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bernoulli.hpp>

#include "kvd/errors.hpp"
#include "numeric.hpp"

namespace kvd {

using namespace detail;

namespace {

std::complex<double> lanczos_gamma(std::complex<double> z) {
    static constexpr double g = 7.0;
    static constexpr std::array<double, 9> coef = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    const double pi_d = pi<double>();
    if (z.real() < 0.5) {
        return pi_d / (std::sin(pi_d * z) * lanczos_gamma(1.0 - z));
    }
    z -= 1.0;
    std::complex<double> acc = coef[0];
    for (int i = 1; i < 9; ++i) acc += coef[i] / (z + double(i));
    const std::complex<double> t = z + g + 0.5;
    return std::sqrt(2.0 * pi_d) * std::exp((z + 0.5) * std::log(t) - t) * acc;
}

ext_complex stirling_gamma(const ext_complex& z) {
    const ext_real p = pi<ext_real>();
    if (z.real() < ext_real(0.5)) {
        return ext_complex(p) / (sin(z * p) * stirling_gamma(ext_complex(1) - z));
    }
    // Shift up until |w| >= 50; 30 Bernoulli terms then leave an error far below 1e-50.
    ext_complex w = z;
    ext_complex shift(1);
    while (abs(w) < ext_real(50)) {
        shift *= w;
        w += ext_real(1);
    }
    ext_complex lg = (w - ext_real(0.5)) * log(w) - w + log(ext_real(2) * p) / ext_real(2);
    const ext_complex w2 = w * w;
    ext_complex wpow = w;
    for (int k = 1; k <= 30; ++k) {
        const ext_real b = boost::math::bernoulli_b2n<ext_real>(k);
        lg += b / (ext_real(2 * k) * ext_real(2 * k - 1) * wpow);
        wpow *= w2;
    }
    return exp(lg) / shift;
}

template <class R>
void require_convergent_alpha(const cplx<R>& alpha, const char* who) {
    if (!(alpha.real() > 0))
        throw DomainError(std::string(who) + ": Re(alpha) must be positive here");
}

template <class R>
cplx<R> trig_G1(const CaseParams<R>& cs, const cplx<R>& alpha, const cplx<R>& x,
                const TruncationPolicy& policy) {
    const R r = cs.r;
    const cplx<R> p = exp(-alpha * r);
    const R absp = abs(p);
    if (!(absp < R(1))) throw DomainError("trigonometric gamma: |exp(-r alpha)| >= 1");
    const cplx<R> p2 = p * p;
    const R absp2 = absp * absp;
    const cplx<R> w = exp(mul_i<R>(x) * (R(2) * r));
    const R target = R(policy.target_rel_err);
    cplx<R> prod(1);
    cplx<R> k = p * w;  // p^{2n-1} w
    for (int n = 1;; ++n) {
        prod *= cplx<R>(1) - k;
        k *= p2;
        if (abs(k) <= target * (R(1) - absp2)) break;
        if (n >= policy.product_terms)
            throw DomainError("trigonometric gamma: product did not converge within product_terms");
    }
    return exp(-x * x * r / (alpha * R(2))) / prod;
}

template <class R>
cplx<R> elliptic_G1(const CaseParams<R>& cs, const cplx<R>& alpha, const cplx<R>& x,
                    const TruncationPolicy& policy) {
    const R r = cs.r;
    const R p = cs.nome();
    const R p2 = p * p;
    const cplx<R> t = exp(-alpha * r);
    const R abst = abs(t);
    if (!(abst < R(1))) throw DomainError("elliptic gamma: |exp(-r alpha)| >= 1");
    const cplx<R> t2 = t * t;
    const R abst2 = abst * abst;
    // With z = x - ia/2: p^{2n-1} e^{2irz} = p^{2n-2} w and p^{2n-1} e^{-2irz} = p^{2n} / w.
    const cplx<R> w = exp(mul_i<R>(x) * (R(2) * r));
    const cplx<R> winv = cplx<R>(1) / w;
    const R spread = abs(w) + p2 * abs(winv);
    const R target = R(policy.target_rel_err);
    cplx<R> prod(1);
    cplx<R> tm = t;  // t^{2m-1}
    for (int m = 1;; ++m) {
        cplx<R> down = tm * w;          // p^{2n-2} t^{2m-1} w
        cplx<R> up = tm * winv * p2;    // p^{2n} t^{2m-1} / w
        for (int n = 1;; ++n) {
            prod *= (cplx<R>(1) - up) / (cplx<R>(1) - down);
            down *= p2;
            up *= p2;
            if ((abs(down) + abs(up)) <= target * (R(1) - p2) * R(0.1)) break;
            if (n >= policy.product_terms)
                throw DomainError("elliptic gamma: inner product did not converge");
        }
        tm *= t2;
        const R rest = abs(tm) * spread / ((R(1) - p2) * (R(1) - abst2));
        if (rest <= target) break;
        if (m >= policy.product_terms)
            throw DomainError("elliptic gamma: outer product did not converge");
    }
    return exp(-x * x * r / (alpha * R(2))) * prod;
}

template <class R>
struct GaussRule;

template <>
struct GaussRule<double> {
    using rule = boost::math::quadrature::gauss<double, 20>;
};

template <>
struct GaussRule<ext_real> {
    using rule = boost::math::quadrature::gauss<ext_real, 40>;
};

}  // namespace

template <class R>
cplx<R> euler_gamma(const cplx<R>& z) {
    if constexpr (std::is_same_v<R, double>) {
        return lanczos_gamma(z);
    } else {
        return stirling_gamma(z);
    }
}

template <class R>
cplx<R> hyperbolic_exponent(const R& a, const cplx<R>& alpha, const cplx<R>& z,
                            const TruncationPolicy& policy) {
    const R target = R(policy.target_rel_err);
    const R delta = a + alpha.real() - R(2) * abs(z.imag());
    if (!(delta > 0)) throw DomainError("hyperbolic gamma: argument outside the strip");
    const cplx<R> pref = z / (alpha * a);

    // Power series in u = y^2 of sin(2zy)/(2zy) divided by sinh(ay) sinh(alpha y)/(a alpha y^2).
    constexpr int kMax = 60;
    std::vector<cplx<R>> num(kMax + 1), sa(kMax + 1), sb(kMax + 1), den(kMax + 1), ratio(kMax + 1);
    {
        const cplx<R> m4z2 = -z * z * R(4);
        cplx<R> pn(1), pa(1), pb(1);
        R fact(1);  // (2k+1)!
        for (int k = 0; k <= kMax; ++k) {
            if (k > 0) fact *= R(2 * k) * R(2 * k + 1);
            num[k] = pn / fact;
            sa[k] = pa / fact;
            sb[k] = pb / fact;
            pn *= m4z2;
            pa *= a * a;
            pb *= alpha * alpha;
        }
        for (int k = 0; k <= kMax; ++k) {
            den[k] = cplx<R>(0);
            for (int j = 0; j <= k; ++j) den[k] += sa[j] * sb[k - j];
        }
        for (int k = 0; k <= kMax; ++k) {
            cplx<R> c = num[k];
            for (int j = 1; j <= k; ++j) c -= den[j] * ratio[k - j];
            ratio[k] = c;  // den[0] == 1
        }
    }
    R scale = R(1);
    scale = std::max(scale, abs(z) * R(2));
    scale = std::max(scale, a);
    scale = std::max(scale, abs(alpha));
    const R y0 = R(0.5) / scale;

    // Integrand of the representation, series form below y0 to avoid cancellation.
    auto integrand = [&](const R& y) -> cplx<R> {
        if (y < y0) {
            const R u = y * y;
            cplx<R> acc(0);
            R upow(1);
            for (int k = 1; k <= kMax; ++k) {
                const cplx<R> term = ratio[k] * upow;
                acc += term;
                if (abs(term) <= target * abs(acc) * R(0.01)) break;
                upow *= u;
            }
            return pref * acc;
        }
        const cplx<R> e_plus = exp((mul_i<R>(z) * R(2) - alpha - cplx<R>(a)) * y);
        const cplx<R> e_minus = exp((-mul_i<R>(z) * R(2) - alpha - cplx<R>(a)) * y);
        const cplx<R> d = mul_i<R>((cplx<R>(1) - exp(cplx<R>(-R(2) * a * y))) *
                                   (cplx<R>(1) - exp(-alpha * (R(2) * y))));
        return ((e_plus - e_minus) / d - pref / y) / y;
    };

    // Patch [0, y0] integrated term by term.
    cplx<R> total(0);
    {
        R ypow = y0;  // y0^{2k-1}
        for (int k = 1; k <= kMax; ++k) {
            const cplx<R> term = ratio[k] * ypow / R(2 * k - 1);
            total += term;
            if (abs(term) <= target * abs(total) * R(0.01) && k > 2) break;
            if (k == kMax) throw DomainError("hyperbolic gamma: series patch did not converge");
            ypow *= y0 * y0;
        }
        total *= pref;
    }

    // Upper limit Y from the tail bound 2 exp(-delta Y) / (delta Y (1 - e^{-2aY})(1 - e^{-2 Re(alpha) Y})).
    R upper = y0 + R(1);
    for (int it = 0; it < 200; ++it) {
        const R damp = (R(1) - exp(-R(2) * a * upper)) * (R(1) - exp(-R(2) * alpha.real() * upper));
        const R bound = R(2) * exp(-delta * upper) / (delta * upper * damp);
        if (bound <= target) break;
        upper *= R(1.25);
    }
    if (upper > R(policy.quadrature_cutoff))
        throw DomainError("hyperbolic gamma: required cutoff exceeds quadrature_cutoff");

    R base = R(2);
    base = std::min(base, pi<R>() / std::max(a, abs(alpha)));
    base = std::min(base, R(8) / (R(1) + abs(z) * R(2)));
    const R h = base / R(policy.quadrature_points);
    const long panels = static_cast<long>(to_double((upper - y0) / h)) + 1;
    const R width = (upper - y0) / R(panels);
    using rule = typename GaussRule<R>::rule;
    const auto& xs = rule::abscissa();
    const auto& ws = rule::weights();
    for (long k = 0; k < panels; ++k) {
        const R lo = y0 + width * R(k);
        const R mid = lo + width / R(2);
        const R half = width / R(2);
        cplx<R> acc(0);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const R off = half * xs[i];
            if (xs[i] == R(0)) {
                acc += integrand(mid) * ws[i];
            } else {
                acc += (integrand(mid + off) + integrand(mid - off)) * ws[i];
            }
        }
        total += acc * half;
    }
    // Tail of the subtracted term: int_Y^inf -z/(a alpha y^2) dy.
    total -= pref / upper;
    return total;
}

template <class R>
bool in_hyperbolic_strip(const CaseParams<R>& cs, const cplx<R>& alpha, const cplx<R>& x) {
    const cplx<R> al = alpha.real() > 0 ? alpha : -alpha;
    const cplx<R> xx = alpha.real() > 0 ? x : -x;
    return abs(xx.imag() - cs.a / R(2)) < (cs.a + al.real()) / R(2);
}

template <class R>
cplx<R> gamma_G1(const GammaSpec<R>& spec, const cplx<R>& x) {
    const auto& cs = spec.cs;
    const cplx<R>& alpha = spec.alpha;
    require_convergent_alpha<R>(alpha, "gamma_G1");
    switch (cs.kind) {
        case CaseKind::I:
            return euler_gamma<R>(cplx<R>(R(0.5)) + x / mul_i<R>(alpha));
        case CaseKind::II:
            return trig_G1<R>(cs, alpha, x, spec.policy);
        case CaseKind::III: {
            if (spec.continue_outside_strip) {
                // Shift by multiples of i alpha towards the centre of the strip:
                // G(x) = c s(x - i alpha/2) G(x - i alpha).
                const cplx<R> z = x - cplx<R>(R(0), cs.a / R(2));
                const long k = nearest_int<R>(z.imag() / alpha.real());
                if (k != 0) {
                    const cplx<R> c = functional_eq_constant(cs, alpha, spec.policy);
                    const cplx<R> ia = mul_i<R>(alpha);
                    GammaSpec<R> inner = spec;
                    inner.continue_outside_strip = false;
                    cplx<R> factor(1);
                    if (k > 0) {
                        for (long j = 0; j < k; ++j)
                            factor *= c * s_eval(cs, x - ia / R(2) - ia * R(j), spec.policy);
                    } else {
                        for (long j = 0; j < -k; ++j)
                            factor /= c * s_eval(cs, x + ia / R(2) + ia * R(j), spec.policy);
                    }
                    return factor * gamma_G1(inner, x - ia * R(k));
                }
            }
            if (!in_hyperbolic_strip(cs, alpha, x))
                throw DomainError("hyperbolic gamma: x = " + fmt_c<R>(x) +
                                  " violates |Im(x) - a/2| < Re(a + alpha)/2");
            const cplx<R> z = x - cplx<R>(R(0), cs.a / R(2));
            return exp(mul_i<R>(hyperbolic_exponent<R>(cs.a, alpha, z, spec.policy)));
        }
        case CaseKind::IV:
            return elliptic_G1<R>(cs, alpha, x, spec.policy);
    }
    return cplx<R>(0);
}

template <class R>
cplx<R> gamma_G(const GammaSpec<R>& spec, const cplx<R>& x) {
    if (spec.alpha.real() == R(0)) throw ConfigError("gamma_G: Re(alpha) must be nonzero");
    if (spec.alpha.real() > 0) return gamma_G1(spec, x);
    GammaSpec<R> flipped = spec;
    flipped.alpha = -spec.alpha;
    return gamma_G1(flipped, -x);
}

template <class R>
cplx<R> functional_eq_constant(const CaseParams<R>& cs, const cplx<R>& alpha,
                               const TruncationPolicy& policy) {
    if (alpha.real() == R(0)) throw ConfigError("functional_eq_constant: Re(alpha) must be nonzero");
    if (alpha.real() < 0) return -functional_eq_constant(cs, cplx<R>(-alpha), policy);
    const cplx<R> i = imag_unit<R>();
    switch (cs.kind) {
        case CaseKind::I: return cplx<R>(1) / (i * alpha);
        case CaseKind::II: return -i * (R(2) * cs.r);
        case CaseKind::III: return -i * (R(2) * pi<R>() / cs.a);
        case CaseKind::IV: {
            // -i r prod_{n>=1} (1 - e^{-2rna})^{-1}
            const R q2 = cs.nome() * cs.nome();
            R prod(1);
            R qn = q2;
            for (int n = 1;; ++n) {
                prod *= R(1) - qn;
                qn *= q2;
                if (qn <= R(policy.target_rel_err) * (R(1) - q2)) break;
                if (n >= policy.product_terms)
                    throw DomainError("functional_eq_constant: product did not converge");
            }
            return -i * (cs.r / prod);
        }
    }
    return cplx<R>(0);
}

template <class R>
cplx<R> functional_residual(const GammaSpec<R>& spec, const cplx<R>& x) {
    if (lattice_distance(spec.cs, x) < R(spec.policy.pole_floor))
        throw DomainError("functional_residual: s(x) within pole_floor of zero");
    const cplx<R> half = mul_i<R>(spec.alpha) / R(2);
    const cplx<R> ratio = gamma_G(spec, x + half) / gamma_G(spec, x - half);
    return ratio - functional_eq_constant(spec.cs, spec.alpha, spec.policy) *
                       s_eval(spec.cs, x, spec.policy);
}

#define KVD_INSTANTIATE(R)                                                                   \
    template cplx<R> euler_gamma<R>(const cplx<R>&);                                         \
    template cplx<R> gamma_G1<R>(const GammaSpec<R>&, const cplx<R>&);                       \
    template cplx<R> gamma_G<R>(const GammaSpec<R>&, const cplx<R>&);                        \
    template cplx<R> functional_eq_constant<R>(const CaseParams<R>&, const cplx<R>&,         \
                                               const TruncationPolicy&);                     \
    template cplx<R> functional_residual<R>(const GammaSpec<R>&, const cplx<R>&);            \
    template bool in_hyperbolic_strip<R>(const CaseParams<R>&, const cplx<R>&, const cplx<R>&); \
    template cplx<R> hyperbolic_exponent<R>(const R&, const cplx<R>&, const cplx<R>&,        \
                                            const TruncationPolicy&);

KVD_INSTANTIATE(double)
KVD_INSTANTIATE(ext_real)

}  // namespace kvd
