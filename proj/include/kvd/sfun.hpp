#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "kvd/scalar.hpp"

namespace kvd {

enum class CaseKind { I, II, III, IV };

std::string_view to_string(CaseKind kind);
CaseKind parse_case(std::string_view text);  // "I".."IV"

// Truncation and tolerance knobs shared by every series, product and quadrature.
struct TruncationPolicy {
    int product_terms = 4000;          // cap on terms per series or product
    int quadrature_points = 2;         // Gauss panels per base width (hyperbolic gamma)
    double quadrature_cutoff = 4000.0; // largest allowed upper limit of the hyperbolic integral
    double target_rel_err = 5e-16;
    double pole_floor = 1e-7;
    double max_nome = 0.75;

    // Defaults scaled to a working precision of `digits10` significant digits.
    static TruncationPolicy for_digits(int digits10);

    // Throws ConfigError when a field is out of range for that precision.
    void validate(int digits10) const;

    bool operator==(const TruncationPolicy&) const = default;
};

template <class R>
struct CaseParams {
    CaseKind kind = CaseKind::I;
    R r = R(0);  // cases II, IV
    R a = R(0);  // cases III, IV
    int rho = 0;
    std::vector<cplx<R>> omega;  // omega[0] = 0
    std::vector<int> eps;
    std::vector<int> xi;

    static CaseParams rational();
    static CaseParams trigonometric(R r);
    static CaseParams hyperbolic(R a);
    static CaseParams elliptic(R r, R a, double max_nome = 0.75);
    // Builds any case; scale parameters not used by `kind` are ignored.
    static CaseParams make(CaseKind kind, R r, R a, double max_nome = 0.75);

    R nome() const;          // e^{-ra}, case IV
    cplx<R> tau() const;     // ira/pi, case IV
    cplx<R> omega_sum() const;
    // Product over nu >= 1 of s(omega_nu/2), squared and divided by four.
    cplx<R> half_period_prefactor(const TruncationPolicy& policy = {}) const;

    template <class S>
    CaseParams<S> convert() const {
        return CaseParams<S>::make(kind, S(r), S(a), 1.0);
    }
};

// Odd Jacobi theta function, alternating q-series with quasi-period reduction.
template <class R>
cplx<R> theta_eval(const cplx<R>& z, const cplx<R>& tau, const TruncationPolicy& policy = {});

// Product representation; kept as an independent cross-check of theta_eval.
template <class R>
cplx<R> theta_product(const cplx<R>& z, const cplx<R>& tau, const TruncationPolicy& policy = {});

template <class R>
cplx<R> s_eval(const CaseParams<R>& cs, const cplx<R>& x, const TruncationPolicy& policy = {});

// epsilon_nu * exp(2 i r xi_nu (x + omega_nu/2)), so that s(x + omega_nu) = factor * s(x).
template <class R>
cplx<R> quasi_factor(const CaseParams<R>& cs, int nu, const cplx<R>& x);

// s(2x) - 2 prod_{nu=0}^{rho} s(x - omega_nu/2) / prod_{nu=1}^{rho} s(-omega_nu/2).
template <class R>
cplx<R> duplication_residual(const CaseParams<R>& cs, const cplx<R>& x,
                             const TruncationPolicy& policy = {});

// Distance from x to the nearest zero of s.
template <class R>
R lattice_distance(const CaseParams<R>& cs, const cplx<R>& x);

}  // namespace kvd
