#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "kvd/sfun.hpp"

namespace kvd {

enum class MassTag { P1, M1, P_INV_L, M_INV_L };

std::string_view to_string(MassTag tag);
MassTag parse_mass(std::string_view text);
std::vector<MassTag> parse_masses(std::string_view comma_list);

template <class R>
R mass_value(MassTag tag, const R& lambda);

// How m' relates to m: m' = m, -m, 1/(lambda m) or -1/(lambda m).
enum class MassRelation { Same, Negated, Dual, NegatedDual };
MassRelation relate(MassTag m, MassTag mp);

template <class R>
struct CouplingSet {
    std::vector<R> g;
    R lambda = R(1);
    R beta = R(1);

    R gsum() const;
    // Throws ConfigError naming the offending field.
    void validate(const CaseParams<R>& cs) const;

    template <class S>
    CouplingSet<S> convert() const {
        CouplingSet<S> out;
        for (const auto& v : g) out.g.push_back(S(v));
        out.lambda = S(lambda);
        out.beta = S(beta);
        return out;
    }
};

// Advisory check of the standing assumption (i beta/m) Z and the zero lattice are disjoint.
struct IncommensurabilityReport {
    bool ok = true;
    std::string detail;
};

template <class R>
IncommensurabilityReport check_incommensurable(const CaseParams<R>& cs, const CouplingSet<R>& cp,
                                               const TruncationPolicy& policy, int k_check = 12);

template <class R>
struct Configuration {
    CaseParams<R> cs;
    CouplingSet<R> couplings;
    std::vector<MassTag> masses;
    cvec<R> X;
    TruncationPolicy policy{};

    std::vector<R> mass_values() const;
    R mass_sum() const;
    // Case IV: 2 lambda sum(m) + sum(g) - 2(lambda + 1); zero means balanced.
    R balance_defect() const;
    bool balanced(double tol = 1e-12) const;
    // X_J off the zero lattice and X_J != +-X_K, both up to pole_floor.
    void validate() const;
};

template <class R>
using TestFunction = std::function<cplx<R>(const cvec<R>&)>;

// Operator value at a point with the magnitude of its largest single term.
template <class R>
struct Application {
    cplx<R> value;
    R scale;
};

// s(arg) used as a denominator; throws DomainError when arg is within pole_floor of a zero.
template <class R>
cplx<R> s_denominator(const CaseParams<R>& cs, const cplx<R>& arg, const TruncationPolicy& policy,
                      const char* what);

template <class R>
R d_param(const R& g, MassTag m, const R& lambda);

template <class R>
cplx<R> f_pm(const CaseParams<R>& cs, const cplx<R>& x, const R& m, const R& mp,
             const CouplingSet<R>& cp, int sign, const TruncationPolicy& policy = {});

template <class R>
cplx<R> coeff_V_shift(const Configuration<R>& config, std::size_t J, int sign);

template <class R>
// With largest_term, also the magnitude of the largest summand (cancellation scale).
cplx<R> coeff_V0(const Configuration<R>& config, R* largest_term = nullptr);

template <class R>
cplx<R> a_of_m(const R& m, const CouplingSet<R>& cp);

// sum_{eps,J} s(i lambda m_J beta) V^eps_J(X) fn(X_J -> X_J - eps i beta/m_J) + V^0(X) fn(X).
template <class R>
Application<R> apply_conjugated_operator(const Configuration<R>& config, const TestFunction<R>& fn);

// Counts of the four particle species appearing in the corollaries.
struct ParticleCounts {
    int N = 0;
    int Nt = 0;
    int M = 0;
    int Mt = 0;
    bool operator==(const ParticleCounts&) const = default;
};

enum class ConstantKind {
    Source,   // theorem eigenvalue, uses the mass sum
    C0,       // c^0
    EN,       // van Diejen groundstate eigenvalue
    CNM,      // kernel constant, m = 1 and m = -1 blocks
    CtNMt,    // dual kernel constant, m = 1 and m = 1/lambda blocks
    ENNt,     // deformed groundstate eigenvalue
    CNNtMMt,  // deformed kernel constant
};

std::string_view to_string(ConstantKind kind);

// Additive constants of the theorem and the corollaries.
template <class R>
cplx<R> eigen_constant(const CaseParams<R>& cs, const CouplingSet<R>& cp, ConstantKind kind,
                       const ParticleCounts& counts, const R& mass_sum = R(0),
                       const TruncationPolicy& policy = {});

// Theorem constant for a configuration.
template <class R>
cplx<R> eigen_constant(const Configuration<R>& config);

enum class BalanceKind { Theorem, Cor1, Cor2, Cor3, Cor4, Cor6 };

std::string_view to_string(BalanceKind kind);

// Left side of the case IV balancing display for `kind`; zero when balanced.
template <class R>
R balance_defect(BalanceKind kind, const CouplingSet<R>& cp, const ParticleCounts& counts,
                 const R& mass_sum = R(0));

// Value of g[free_index] that makes the display vanish, others fixed.
template <class R>
R balance_solve(BalanceKind kind, const CouplingSet<R>& cp, const ParticleCounts& counts,
                std::size_t free_index, const R& mass_sum = R(0));

template <class R>
R balance_solve(const CouplingSet<R>& cp, const std::vector<MassTag>& masses, std::size_t free_index);

// Free parameters of the key functional identity.
template <class R>
struct KeyLemmaParams {
    cplx<R> gamma;
    cvec<R> a;  // one per variable
    cvec<R> c;  // rho + 1
    cvec<R> d;  // rho + 1
    cvec<R> n;  // 2 rho + 2

    void validate(const CaseParams<R>& cs, std::size_t count, const TruncationPolicy& policy) const;
    // 2 gamma sum(m) + sum(n); zero is the case IV balancing condition.
    cplx<R> balance_defect(const cvec<R>& m) const;
};

template <class R>
struct KeyLemmaSides {
    cplx<R> lhs;
    cplx<R> rhs;
    R scale;
};

template <class R>
KeyLemmaSides<R> key_lemma_sides(const CaseParams<R>& cs, const KeyLemmaParams<R>& klp,
                                 const cvec<R>& X, const cvec<R>& m,
                                 const TruncationPolicy& policy = {});

}  // namespace kvd
