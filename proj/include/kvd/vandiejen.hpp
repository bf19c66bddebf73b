#pragma once
// Specialized van Diejen and deformed operators, coded directly from their own
// coefficient formulas (not through the generic mass-vector coefficients).

#include <functional>

#include "kvd/operators.hpp"

namespace kvd {

// Function of the two variable blocks (x, xt).
template <class R>
using BlockFunction = std::function<cplx<R>(const cvec<R>& x, const cvec<R>& xt)>;

// V_j^{sign}(x, xt) of the deformed operator; with xt empty this is the van Diejen coefficient.
template <class R>
cplx<R> deformed_V_shift(const CaseParams<R>& cs, const cvec<R>& x, const cvec<R>& xt,
                         const CouplingSet<R>& cp, std::size_t j, int sign,
                         const TruncationPolicy& policy = {});

// Vt_k^{sign}(x, xt), the coefficient of the xt_k shift.
template <class R>
cplx<R> deformed_Vt_shift(const CaseParams<R>& cs, const cvec<R>& x, const cvec<R>& xt,
                          const CouplingSet<R>& cp, std::size_t k, int sign,
                          const TruncationPolicy& policy = {});

// Potential V^0(x, xt) of the deformed operator (includes the constant c^0).
template <class R>
cplx<R> deformed_V0(const CaseParams<R>& cs, const cvec<R>& x, const cvec<R>& xt,
                    const CouplingSet<R>& cp, const TruncationPolicy& policy = {},
                    R* largest_term = nullptr);

// Van Diejen potential V^0(x) for the all-unit-mass operator.
template <class R>
cplx<R> vd_V0(const CaseParams<R>& cs, const cvec<R>& x, const CouplingSet<R>& cp,
              const TruncationPolicy& policy = {}, R* largest_term = nullptr);

// A_{N,Nt} fn at (x, xt):
// sum_eps [s(i lambda beta) sum_j V_j^eps fn(x_j - eps i beta) - s(i beta) sum_k Vt_k^eps fn(xt_k + eps i lambda beta)] + V^0 fn.
template <class R>
Application<R> apply_deformed(const CaseParams<R>& cs, const cvec<R>& x, const cvec<R>& xt,
                              const CouplingSet<R>& cp, const BlockFunction<R>& fn,
                              const TruncationPolicy& policy = {});

// A_N fn at x, the van Diejen operator with plain coefficients.
template <class R>
Application<R> apply_vd(const CaseParams<R>& cs, const cvec<R>& x, const CouplingSet<R>& cp,
                        const TestFunction<R>& fn, const TruncationPolicy& policy = {});

// Coupling transforms used by the corollaries.
template <class R>
CouplingSet<R> kernel_partner(const CouplingSet<R>& cp);  // g -> (lambda + 1)/2 - g
template <class R>
CouplingSet<R> dual_partner(const CouplingSet<R>& cp);  // (g/lambda, 1/lambda, lambda beta)
template <class R>
CouplingSet<R> deformed_partner(const CouplingSet<R>& cp);  // ((lambda + 1 - 2g)/(2 lambda), 1/lambda, lambda beta)

// Weight of the xt block in the trigonometric deformed power sum p_n.
enum class PowerSumWeight {
    Corrected,  // -exp(-rn(lambda-1)beta)(1 - exp(-2rn beta))/(1 - exp(-2rn lambda beta))
    Printed,    // the same expression without the leading minus sign
    Unit,       // 1, a deliberately wrong weight
};

template <class R>
R power_sum_weight(const CaseParams<R>& cs, const CouplingSet<R>& cp, int n, PowerSumWeight form);

// p_n(x, xt) = sum_j 2 cos(2 r n x_j) + w_n sum_k 2 cos(2 r n xt_k), case II.
template <class R>
cplx<R> deformed_power_sum(const CaseParams<R>& cs, const cvec<R>& x, const cvec<R>& xt,
                           const R& weight, int n);

}  // namespace kvd
