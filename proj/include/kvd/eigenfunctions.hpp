#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "kvd/gamma.hpp"
#include "kvd/operators.hpp"

namespace kvd {

// G(u; alpha)^exponent or s(u)^exponent with u linear in the variables:
// u = sum coeff * X[index] + offset.
template <class R>
struct Atom {
    enum class Kind { Gamma, S };
    Kind kind = Kind::S;
    std::vector<std::pair<std::size_t, int>> coeffs;
    cplx<R> offset{};
    cplx<R> alpha{};  // Gamma only
    int exponent = 1;

    cplx<R> argument(const cvec<R>& X) const;
};

// Product of atoms raised to power2/2: 2 plain, 1 square root, -1 inverse square root.
template <class R>
struct Factor {
    std::string label;
    int power2 = 2;
    std::vector<Atom<R>> atoms;
};

// Straight-line continuation of square roots from a reference configuration.
template <class R>
struct BranchTracker {
    cvec<R> reference_point;
    std::vector<int> reference_sheet;  // per root factor (in factor order); empty means all +1
    int path_steps = 48;
    int max_refine = 12;
    // Flip the sheet of this root factor in the final value (fault injection); -1 disables.
    int fault_factor = -1;

    // Root of base(X) continued from reference_point to target along a straight line,
    // starting on `sheet` times the principal root at the reference.
    cplx<R> continue_root(const std::function<cplx<R>(const cvec<R>&)>& base,
                          const cvec<R>& target, int sheet = 1) const;
};

template <class R>
class Eigenfunction {
public:
    CaseParams<R> cs;
    TruncationPolicy policy{};
    std::size_t arity = 0;
    std::vector<Factor<R>> factors;
    // Case III: Gamma atoms outside the integral strip are continued by the functional equation.
    bool continue_outside_strip = true;

    cplx<R> atom_value(const Atom<R>& atom, const cvec<R>& X) const;
    cplx<R> base(const Factor<R>& f, const cvec<R>& X) const;
    // F(X)^2, independent of any branch choice.
    cplx<R> squared(const cvec<R>& X) const;
    // F(X) with square roots continued by the tracker.
    cplx<R> value(const cvec<R>& X, const BranchTracker<R>& tracker) const;
    std::size_t root_factor_count() const;

    // (F(X')/F(X))^2 for X' = X + delta e_var, reduced with the functional equation
    // to s-values and constants c; throws DomainError if a Gamma atom's argument
    // does not move by an integer multiple of i alpha.
    cplx<R> closure_ratio_squared(const cvec<R>& X, std::size_t var, const cplx<R>& delta) const;
    // The same ratio from direct Gamma evaluation.
    cplx<R> direct_ratio_squared(const cvec<R>& X, std::size_t var, const cplx<R>& delta) const;
    // F(X')/F(X) itself; every factor touched by the shift must be a plain (power2 = 2) factor.
    cplx<R> closure_ratio(const cvec<R>& X, std::size_t var, const cplx<R>& delta) const;
    cplx<R> direct_ratio(const cvec<R>& X, std::size_t var, const cplx<R>& delta) const;

    // Appends the factors of `other`, with its variable i mapped to `index_map[i]`.
    void append(const Eigenfunction& other, const std::vector<std::size_t>& index_map);

private:
    cplx<R> shift_ratio(const cvec<R>& X, std::size_t var, const cplx<R>& delta, bool closure,
                        bool squared) const;
};

// psi(x; m)^2 for a single variable.
template <class R>
cplx<R> psi_squared(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cplx<R>& x, MassTag m,
                    const TruncationPolicy& policy = {});

// Builders. Variables are laid out block by block in the order of the arguments.
template <class R>
Eigenfunction<R> source_eigenfunction(const Configuration<R>& config);
template <class R>
Eigenfunction<R> groundstate_function(const CaseParams<R>& cs, const CouplingSet<R>& cp, int N,
                                      const TruncationPolicy& policy = {});
template <class R>
Eigenfunction<R> deformed_groundstate_function(const CaseParams<R>& cs, const CouplingSet<R>& cp,
                                               int N, int Nt, const TruncationPolicy& policy = {});
// Interaction parts (no groundstate factors) of the kernel functions.
template <class R>
Eigenfunction<R> cauchy_interaction(const CaseParams<R>& cs, const CouplingSet<R>& cp, int N, int M,
                                    const TruncationPolicy& policy = {});
template <class R>
Eigenfunction<R> dual_cauchy_interaction(const CaseParams<R>& cs, int N, int Mt,
                                         const TruncationPolicy& policy = {});
template <class R>
Eigenfunction<R> deformed_interaction(const CaseParams<R>& cs, const CouplingSet<R>& cp,
                                      const ParticleCounts& n, const TruncationPolicy& policy = {});
// Full kernels: groundstates times interaction.
template <class R>
Eigenfunction<R> kernel_cauchy_function(const CaseParams<R>& cs, const CouplingSet<R>& cp, int N,
                                        int M, const TruncationPolicy& policy = {});
template <class R>
Eigenfunction<R> kernel_dual_cauchy_function(const CaseParams<R>& cs, const CouplingSet<R>& cp,
                                             int N, int Mt, const TruncationPolicy& policy = {});
template <class R>
Eigenfunction<R> kernel_deformed_function(const CaseParams<R>& cs, const CouplingSet<R>& cp,
                                          const ParticleCounts& n, const TruncationPolicy& policy = {});

// Point evaluations with branch tracking.
template <class R>
cplx<R> psi_single(const Configuration<R>& config, const cplx<R>& x, MassTag m,
                   const BranchTracker<R>& branch);
template <class R>
cplx<R> phi_pair(const Configuration<R>& config, const cplx<R>& x, MassTag m, MassTag mp,
                 const BranchTracker<R>& branch);
template <class R>
cplx<R> Phi_total(const Configuration<R>& config, const BranchTracker<R>& branch);
template <class R>
cplx<R> groundstate_Psi(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                        const BranchTracker<R>& branch, const TruncationPolicy& policy = {});
template <class R>
cplx<R> deformed_groundstate(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                             const cvec<R>& xt, const BranchTracker<R>& branch,
                             const TruncationPolicy& policy = {});
template <class R>
cplx<R> kernel_cauchy(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                      const cvec<R>& y, const BranchTracker<R>& branch,
                      const TruncationPolicy& policy = {});
template <class R>
cplx<R> kernel_dual_cauchy(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                           const cvec<R>& yt, const BranchTracker<R>& branch,
                           const TruncationPolicy& policy = {});
template <class R>
cplx<R> kernel_deformed(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                        const cvec<R>& xt, const cvec<R>& y, const cvec<R>& yt,
                        const BranchTracker<R>& branch, const TruncationPolicy& policy = {});

// Spread of F(X_i)^2 / G(X_i)^2 across points, relative to its mean magnitude;
// small values mean F and G agree up to an X-independent constant.
template <class R>
R ratio_constancy(const Eigenfunction<R>& F, const Eigenfunction<R>& G,
                  const std::vector<cvec<R>>& points);

}  // namespace kvd
