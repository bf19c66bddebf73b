#include "kvd/vandiejen.hpp"

#include "kvd/errors.hpp"
#include "numeric.hpp"

namespace kvd {

using namespace detail;

template <class R>
cplx<R> deformed_V_shift(const CaseParams<R>& cs, const cvec<R>& x, const cvec<R>& xt,
                         const CouplingSet<R>& cp, std::size_t j, int sign,
                         const TruncationPolicy& pol) {
    const R e(sign);
    const R& lam = cp.lambda;
    const R& beta = cp.beta;
    const cplx<R> X = x[j];
    const cplx<R> i = imag_unit<R>();
    cplx<R> v(1);
    for (const R& g : cp.g) v *= s_eval(cs, cplx<R>(X * e - i * (g * beta)), pol);
    v /= s_denominator(cs, cplx<R>(X * (R(2) * e)), pol, "V_j");
    v /= s_denominator(cs, cplx<R>(X * (R(2) * e) - i * beta), pol, "V_j");
    for (int d : {1, -1}) {
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (k == j) continue;
            const cplx<R> u = X + x[k] * R(d);
            v *= s_eval(cs, cplx<R>(u - i * (e * lam * beta)), pol) / s_denominator(cs, u, pol, "V_j");
        }
        for (const auto& y : xt) {
            const cplx<R> u = X + y * R(d);
            v *= s_eval(cs, cplx<R>(u - i * (e * (lam - R(1)) * beta / R(2))), pol) /
                 s_denominator(cs, cplx<R>(u - i * (e * (lam + R(1)) * beta / R(2))), pol, "V_j");
        }
    }
    return v;
}

template <class R>
cplx<R> deformed_Vt_shift(const CaseParams<R>& cs, const cvec<R>& x, const cvec<R>& xt,
                          const CouplingSet<R>& cp, std::size_t k, int sign,
                          const TruncationPolicy& pol) {
    const R e(sign);
    const R& lam = cp.lambda;
    const R& beta = cp.beta;
    const cplx<R> Y = xt[k];
    const cplx<R> i = imag_unit<R>();
    cplx<R> v(1);
    for (const R& g : cp.g) {
        const R gt = (lam + R(1)) / R(2) - g;
        v *= s_eval(cs, cplx<R>(Y * e + i * (gt * beta)), pol);
    }
    v /= s_denominator(cs, cplx<R>(Y * (R(2) * e)), pol, "Vt_k");
    v /= s_denominator(cs, cplx<R>(Y * (R(2) * e) + i * (lam * beta)), pol, "Vt_k");
    for (int d : {1, -1}) {
        for (std::size_t kk = 0; kk < xt.size(); ++kk) {
            if (kk == k) continue;
            const cplx<R> u = Y + xt[kk] * R(d);
            v *= s_eval(cs, cplx<R>(u + i * (e * beta)), pol) / s_denominator(cs, u, pol, "Vt_k");
        }
        for (const auto& X : x) {
            const cplx<R> u = Y + X * R(d);
            v *= s_eval(cs, cplx<R>(u - i * (e * (lam - R(1)) * beta / R(2))), pol) /
                 s_denominator(cs, cplx<R>(u + i * (e * (lam + R(1)) * beta / R(2))), pol, "Vt_k");
        }
    }
    return v;
}

template <class R>
cplx<R> deformed_V0(const CaseParams<R>& cs, const cvec<R>& x, const cvec<R>& xt,
                    const CouplingSet<R>& cp, const TruncationPolicy& pol, R* largest_term) {
    const R& lam = cp.lambda;
    const R& beta = cp.beta;
    const int rho = cs.rho;
    const auto& om = cs.omega;
    const cplx<R> i = imag_unit<R>();
    const R expo_arg = R(2) * lam * R(x.size()) - R(2) * R(xt.size()) + cp.gsum() -
                       R(rho + 1) * (lam + R(1)) / R(2);
    R largest(0);
    cplx<R> total(0);
    for (int nu = 0; nu <= rho; ++nu) {
        const cplx<R> hw = om[nu] / R(2);
        cplx<R> t(exp(-cs.r * R(cs.xi[nu]) * expo_arg * beta));
        for (int mu = 0; mu <= rho; ++mu)
            if (mu != nu) t /= s_denominator(cs, cplx<R>((om[nu] - om[mu]) / R(2)), pol, "V0(x,xt)");
        for (const R& g : cp.g) t *= s_eval(cs, cplx<R>(hw + i * (beta / R(2) - g * beta)), pol);
        for (int mu = 0; mu <= rho; ++mu)
            t /= s_denominator(cs, cplx<R>((om[nu] - om[mu] + i * ((R(1) - lam) * beta)) / R(2)), pol, "V0(x,xt)");
        for (int d : {1, -1}) {
            for (const auto& X : x) {
                const cplx<R> u = X * R(d) + hw + i * (beta / R(2));
                t *= s_eval(cs, cplx<R>(u - i * (lam * beta)), pol) / s_denominator(cs, u, pol, "V0(x,xt)");
            }
            for (const auto& Y : xt) {
                const cplx<R> u = Y * R(d) + hw - i * (lam * beta / R(2));
                t *= s_eval(cs, cplx<R>(u + i * beta), pol) / s_denominator(cs, u, pol, "V0(x,xt)");
            }
        }
        largest = std::max(largest, R(abs(t)));
        total += t;
    }
    if (largest_term) *largest_term = largest * abs(cs.half_period_prefactor(pol));
    return -cs.half_period_prefactor(pol) * total;
}

template <class R>
cplx<R> vd_V0(const CaseParams<R>& cs, const cvec<R>& x, const CouplingSet<R>& cp,
              const TruncationPolicy& pol, R* largest_term) {
    const R& lam = cp.lambda;
    const R& beta = cp.beta;
    const int rho = cs.rho;
    const auto& om = cs.omega;
    const cplx<R> i = imag_unit<R>();
    const R expo_arg = R(2) * lam * R(x.size()) + cp.gsum() - R(rho + 1) * (lam + R(1)) / R(2);
    R largest(0);
    cplx<R> total(0);
    for (int nu = 0; nu <= rho; ++nu) {
        const cplx<R> hw = om[nu] / R(2);
        cplx<R> num(exp(-cs.r * R(cs.xi[nu]) * expo_arg * beta));
        cplx<R> den(1);
        for (int mu = 0; mu <= rho; ++mu) {
            if (mu != nu) den *= s_denominator(cs, cplx<R>((om[nu] - om[mu]) / R(2)), pol, "V0(x)");
            den *= s_denominator(cs, cplx<R>((om[nu] - om[mu] + i * ((R(1) - lam) * beta)) / R(2)), pol, "V0(x)");
        }
        for (const R& g : cp.g) num *= s_eval(cs, cplx<R>(hw + i * (beta / R(2) - g * beta)), pol);
        for (const auto& X : x) {
            for (int d : {1, -1}) {
                const cplx<R> u = X * R(d) + hw + i * (beta / R(2));
                num *= s_eval(cs, cplx<R>(u - i * (lam * beta)), pol);
                den *= s_denominator(cs, u, pol, "V0(x)");
            }
        }
        largest = std::max(largest, R(abs(num / den)));
        total += num / den;
    }
    if (largest_term) *largest_term = largest * abs(cs.half_period_prefactor(pol));
    return -cs.half_period_prefactor(pol) * total;
}

template <class R>
Application<R> apply_deformed(const CaseParams<R>& cs, const cvec<R>& x, const cvec<R>& xt,
                              const CouplingSet<R>& cp, const BlockFunction<R>& fn,
                              const TruncationPolicy& pol) {
    R largest(0);
    const cplx<R> f0 = fn(x, xt);
    const cplx<R> v0 = deformed_V0(cs, x, xt, cp, pol, &largest) * f0;
    Application<R> out{v0, std::max(R(abs(v0)), R(largest * abs(f0)))};
    const cplx<R> lead_x = s_eval(cs, cplx<R>(R(0), cp.lambda * cp.beta), pol);
    const cplx<R> lead_xt = s_eval(cs, cplx<R>(R(0), cp.beta), pol);
    for (int e : {1, -1}) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            cvec<R> xs = x;
            xs[j] -= cplx<R>(R(0), R(e) * cp.beta);
            const cplx<R> term = lead_x * deformed_V_shift(cs, x, xt, cp, j, e, pol) * fn(xs, xt);
            out.value += term;
            out.scale = std::max(out.scale, R(abs(term)));
        }
        for (std::size_t k = 0; k < xt.size(); ++k) {
            cvec<R> ys = xt;
            ys[k] += cplx<R>(R(0), R(e) * cp.lambda * cp.beta);
            const cplx<R> term = lead_xt * deformed_Vt_shift(cs, x, xt, cp, k, e, pol) * fn(x, ys);
            out.value -= term;
            out.scale = std::max(out.scale, R(abs(term)));
        }
    }
    return out;
}

template <class R>
Application<R> apply_vd(const CaseParams<R>& cs, const cvec<R>& x, const CouplingSet<R>& cp,
                        const TestFunction<R>& fn, const TruncationPolicy& pol) {
    const cvec<R> none;
    R largest(0);
    const cplx<R> f0 = fn(x);
    const cplx<R> v0 = vd_V0(cs, x, cp, pol, &largest) * f0;
    Application<R> out{v0, std::max(R(abs(v0)), R(largest * abs(f0)))};
    const cplx<R> lead = s_eval(cs, cplx<R>(R(0), cp.lambda * cp.beta), pol);
    for (int e : {1, -1}) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            cvec<R> xs = x;
            xs[j] -= cplx<R>(R(0), R(e) * cp.beta);
            const cplx<R> term = lead * deformed_V_shift(cs, x, none, cp, j, e, pol) * fn(xs);
            out.value += term;
            out.scale = std::max(out.scale, R(abs(term)));
        }
    }
    return out;
}

template <class R>
CouplingSet<R> kernel_partner(const CouplingSet<R>& cp) {
    CouplingSet<R> out = cp;
    for (auto& g : out.g) g = (cp.lambda + R(1)) / R(2) - g;
    return out;
}

template <class R>
CouplingSet<R> dual_partner(const CouplingSet<R>& cp) {
    CouplingSet<R> out = cp;
    for (auto& g : out.g) g /= cp.lambda;
    out.lambda = R(1) / cp.lambda;
    out.beta = cp.lambda * cp.beta;
    return out;
}

template <class R>
CouplingSet<R> deformed_partner(const CouplingSet<R>& cp) {
    CouplingSet<R> out = cp;
    for (auto& g : out.g) g = (cp.lambda + R(1) - R(2) * g) / (R(2) * cp.lambda);
    out.lambda = R(1) / cp.lambda;
    out.beta = cp.lambda * cp.beta;
    return out;
}

template <class R>
R power_sum_weight(const CaseParams<R>& cs, const CouplingSet<R>& cp, int n, PowerSumWeight form) {
    if (cs.kind != CaseKind::II) throw ConfigError("deformed power sums are defined for case II");
    if (form == PowerSumWeight::Unit) return R(1);
    const R rn = cs.r * R(n);
    const R w = exp(-rn * (cp.lambda - R(1)) * cp.beta) * (R(1) - exp(-R(2) * rn * cp.beta)) /
                (R(1) - exp(-R(2) * rn * cp.lambda * cp.beta));
    return form == PowerSumWeight::Corrected ? -w : w;
}

template <class R>
cplx<R> deformed_power_sum(const CaseParams<R>& cs, const cvec<R>& x, const cvec<R>& xt,
                           const R& weight, int n) {
    const R k = R(2) * cs.r * R(n);
    cplx<R> a(0), b(0);
    for (const auto& v : x) a += cos(v * k) * R(2);
    for (const auto& v : xt) b += cos(v * k) * R(2);
    return a + b * weight;
}

#define KVD_INSTANTIATE(R)                                                                         \
    template cplx<R> deformed_V_shift<R>(const CaseParams<R>&, const cvec<R>&, const cvec<R>&,     \
                                         const CouplingSet<R>&, std::size_t, int,                  \
                                         const TruncationPolicy&);                                 \
    template cplx<R> deformed_Vt_shift<R>(const CaseParams<R>&, const cvec<R>&, const cvec<R>&,    \
                                          const CouplingSet<R>&, std::size_t, int,                 \
                                          const TruncationPolicy&);                                \
    template cplx<R> deformed_V0<R>(const CaseParams<R>&, const cvec<R>&, const cvec<R>&,          \
                                    const CouplingSet<R>&, const TruncationPolicy&, R*);           \
    template cplx<R> vd_V0<R>(const CaseParams<R>&, const cvec<R>&, const CouplingSet<R>&,         \
                              const TruncationPolicy&, R*);                                       \
    template Application<R> apply_deformed<R>(const CaseParams<R>&, const cvec<R>&,                \
                                              const cvec<R>&, const CouplingSet<R>&,               \
                                              const BlockFunction<R>&, const TruncationPolicy&);   \
    template Application<R> apply_vd<R>(const CaseParams<R>&, const cvec<R>&,                      \
                                        const CouplingSet<R>&, const TestFunction<R>&,             \
                                        const TruncationPolicy&);                                  \
    template CouplingSet<R> kernel_partner<R>(const CouplingSet<R>&);                              \
    template CouplingSet<R> dual_partner<R>(const CouplingSet<R>&);                                \
    template CouplingSet<R> deformed_partner<R>(const CouplingSet<R>&);                            \
    template R power_sum_weight<R>(const CaseParams<R>&, const CouplingSet<R>&, int,               \
                                   PowerSumWeight);                                                \
    template cplx<R> deformed_power_sum<R>(const CaseParams<R>&, const cvec<R>&, const cvec<R>&,   \
                                           const R&, int);

KVD_INSTANTIATE(double)
KVD_INSTANTIATE(ext_real)

}  // namespace kvd
