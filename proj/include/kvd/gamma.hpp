#pragma once

#include "kvd/sfun.hpp"

namespace kvd {

template <class R>
struct GammaSpec {
    CaseParams<R> cs;
    cplx<R> alpha;
    TruncationPolicy policy{};
    // Case III only: outside the strip of the integral representation, continue
    // with the functional equation instead of reporting out-of-domain.
    bool continue_outside_strip = false;
};

// Euler Gamma for complex argument. Lanczos (double) or shifted Stirling series (ext).
// Poles give a non-finite result.
template <class R>
cplx<R> euler_gamma(const cplx<R>& z);

// G_1(x; alpha) for Re(alpha) > 0.
template <class R>
cplx<R> gamma_G1(const GammaSpec<R>& spec, const cplx<R>& x);

// G(x; alpha) = G_1(x; alpha) for Re(alpha) > 0 and G_1(-x; -alpha) for Re(alpha) < 0.
template <class R>
cplx<R> gamma_G(const GammaSpec<R>& spec, const cplx<R>& x);

// The constant c with G(x + i alpha/2)/G(x - i alpha/2) = c s(x).
// For Re(alpha) < 0 this is -c(-alpha), which follows from the reflection rule.
template <class R>
cplx<R> functional_eq_constant(const CaseParams<R>& cs, const cplx<R>& alpha,
                               const TruncationPolicy& policy = {});

// G(x + i alpha/2)/G(x - i alpha/2) - c s(x).
template <class R>
cplx<R> functional_residual(const GammaSpec<R>& spec, const cplx<R>& x);

// |Im(x) - a/2| < Re(a + alpha)/2 for the hyperbolic integral, with alpha taken with Re > 0.
template <class R>
bool in_hyperbolic_strip(const CaseParams<R>& cs, const cplx<R>& alpha, const cplx<R>& x);

// Exponent L(z) = int_0^inf dy/y [sin(2zy)/(2 sinh(ay) sinh(alpha y)) - z/(a alpha y)],
// so that the hyperbolic G_1(x; alpha) = exp(i L(x - ia/2)).
template <class R>
cplx<R> hyperbolic_exponent(const R& a, const cplx<R>& alpha, const cplx<R>& z,
                            const TruncationPolicy& policy);

}  // namespace kvd
