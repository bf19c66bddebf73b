#include "kvd/eigenfunctions.hpp"

#include <numeric>

#include "kvd/errors.hpp"
#include "kvd/vandiejen.hpp"
#include "numeric.hpp"

namespace kvd {

using namespace detail;

template <class R>
cplx<R> Atom<R>::argument(const cvec<R>& X) const {
    cplx<R> u = offset;
    for (const auto& [idx, c] : coeffs) u += X[idx] * R(c);
    return u;
}

namespace {

template <class R>
cplx<R> ipow(const cplx<R>& v, int power) {
    switch (power) {
        case 2: return v * v;
        case 1: return v;
        case -1: return cplx<R>(1) / v;
        case -2: return cplx<R>(1) / (v * v);
        case 0: return cplx<R>(1);
    }
    throw ConfigError("unsupported exponent");
}

template <class R>
Atom<R> gamma_atom(std::vector<std::pair<std::size_t, int>> coeffs, cplx<R> offset, cplx<R> alpha,
                   int exponent) {
    Atom<R> a;
    a.kind = Atom<R>::Kind::Gamma;
    a.coeffs = std::move(coeffs);
    a.offset = offset;
    a.alpha = alpha;
    a.exponent = exponent;
    return a;
}

template <class R>
Atom<R> s_atom(std::vector<std::pair<std::size_t, int>> coeffs, cplx<R> offset, int exponent) {
    Atom<R> a;
    a.kind = Atom<R>::Kind::S;
    a.coeffs = std::move(coeffs);
    a.offset = offset;
    a.exponent = exponent;
    return a;
}

// psi(x_var; m): square root of G(+-2x + i beta/2m; beta/m) / prod G(+-x + i beta/2m - i d beta; beta/m).
template <class R>
Factor<R> psi_factor(const CouplingSet<R>& cp, std::size_t var, MassTag tag) {
    const R m = mass_value(tag, cp.lambda);
    const cplx<R> alpha(cp.beta / m, R(0));
    const cplx<R> h(R(0), cp.beta / (R(2) * m));
    Factor<R> f;
    f.label = "psi" + std::to_string(var + 1);
    f.power2 = 1;
    for (int e : {1, -1}) f.atoms.push_back(gamma_atom<R>({{var, 2 * e}}, h, alpha, 1));
    for (const R& g : cp.g) {
        const R d = d_param(g, tag, cp.lambda);
        const cplx<R> off = h - cplx<R>(R(0), d * cp.beta);
        for (int e : {1, -1}) f.atoms.push_back(gamma_atom<R>({{var, e}}, off, alpha, -1));
    }
    return f;
}

// phi(eps X_J + eps' X_K; m_J, m_K) in its four forms.
template <class R>
Factor<R> phi_factor(const CouplingSet<R>& cp, std::size_t J, std::size_t K, int e1, int e2,
                     MassTag mJ, MassTag mK) {
    const R m = mass_value(mJ, cp.lambda);
    const R& lam = cp.lambda;
    const R& beta = cp.beta;
    const cplx<R> alpha(beta / m, R(0));
    std::vector<std::pair<std::size_t, int>> co{{J, e1}, {K, e2}};
    Factor<R> f;
    f.label = "phi" + std::to_string(J + 1) + std::to_string(K + 1);
    switch (relate(mJ, mK)) {
        case MassRelation::Same:
            f.power2 = 1;
            f.atoms.push_back(gamma_atom<R>(co, cplx<R>(R(0), beta / (R(2) * m)), alpha, 1));
            f.atoms.push_back(gamma_atom<R>(co, cplx<R>(R(0), beta / (R(2) * m) - lam * m * beta), alpha, -1));
            break;
        case MassRelation::Negated:
            f.power2 = 2;
            f.atoms.push_back(gamma_atom<R>(co, cplx<R>(R(0), -lam * m * beta / R(2)), alpha, 1));
            break;
        case MassRelation::Dual:
            f.power2 = 1;
            f.atoms.push_back(s_atom<R>(co, cplx<R>(0), 1));
            break;
        case MassRelation::NegatedDual:
            f.power2 = -1;
            f.atoms.push_back(s_atom<R>(co, cplx<R>(R(0), -lam * m * beta / R(2) + beta / (R(2) * m)), 1));
            break;
    }
    return f;
}

template <class R>
std::vector<std::size_t> iota_from(std::size_t start, std::size_t count) {
    std::vector<std::size_t> v(count);
    std::iota(v.begin(), v.end(), start);
    return v;
}

}  // namespace

template <class R>
cplx<R> BranchTracker<R>::continue_root(const std::function<cplx<R>(const cvec<R>&)>& base,
                                        const cvec<R>& target, int sheet) const {
    if (reference_point.size() != target.size())
        throw ConfigError("branch tracker: reference point has the wrong dimension");
    auto point = [&](const R& t) {
        cvec<R> p(target.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            p[i] = reference_point[i] + (target[i] - reference_point[i]) * t;
        return p;
    };
    auto checked = [&](const R& t) {
        const cplx<R> h = base(point(t));
        if (!is_finite<R>(h) || h == cplx<R>(0))
            throw BranchError("branch tracker: square-rooted factor hit a zero or pole on the path");
        return h;
    };
    cplx<R> prev = sqrt(checked(R(0))) * R(sheet);
    // Advance from ta to tb; bisect while the root moved by more than a small angle.
    std::function<void(const R&, const R&, int)> advance = [&](const R& ta, const R& tb, int depth) {
        const cplx<R> c = sqrt(checked(tb));
        const R d1 = abs(c - prev);
        const R d2 = abs(c + prev);
        if (std::min(d1, d2) <= R(0.25) * std::max(d1, d2)) {
            prev = d1 <= d2 ? c : -c;
            return;
        }
        if (depth >= max_refine)
            throw BranchError("branch tracker: continuation ambiguous near a branch point");
        const R mid = (ta + tb) / R(2);
        advance(ta, mid, depth + 1);
        advance(mid, tb, depth + 1);
    };
    bool moved = false;
    for (std::size_t i = 0; i < target.size(); ++i) moved = moved || target[i] != reference_point[i];
    if (!moved) return prev;
    const int steps = std::max(1, path_steps);
    for (int k = 1; k <= steps; ++k) advance(R(k - 1) / R(steps), R(k) / R(steps), 0);
    return prev;
}

template <class R>
cplx<R> Eigenfunction<R>::atom_value(const Atom<R>& atom, const cvec<R>& X) const {
    const cplx<R> u = atom.argument(X);
    cplx<R> v;
    if (atom.kind == Atom<R>::Kind::Gamma) {
        GammaSpec<R> spec{cs, atom.alpha, policy, continue_outside_strip};
        v = gamma_G(spec, u);
        if (!is_finite<R>(v)) throw DomainError("eigenfunction: Gamma factor at a pole");
    } else {
        v = atom.exponent < 0 ? s_denominator(cs, u, policy, "eigenfunction") : s_eval(cs, u, policy);
    }
    return ipow<R>(v, atom.exponent);
}

template <class R>
cplx<R> Eigenfunction<R>::base(const Factor<R>& f, const cvec<R>& X) const {
    cplx<R> v(1);
    for (const auto& a : f.atoms) v *= atom_value(a, X);
    return v;
}

template <class R>
cplx<R> Eigenfunction<R>::squared(const cvec<R>& X) const {
    cplx<R> v(1);
    for (const auto& f : factors) v *= ipow<R>(base(f, X), f.power2);
    return v;
}

template <class R>
std::size_t Eigenfunction<R>::root_factor_count() const {
    std::size_t n = 0;
    for (const auto& f : factors) n += (f.power2 == 1 || f.power2 == -1) ? 1 : 0;
    return n;
}

template <class R>
cplx<R> Eigenfunction<R>::value(const cvec<R>& X, const BranchTracker<R>& tracker) const {
    cplx<R> v(1);
    int root_index = 0;
    for (const auto& f : factors) {
        if (f.power2 == 2) {
            v *= base(f, X);
            continue;
        }
        int sheet = 1;
        if (root_index < static_cast<int>(tracker.reference_sheet.size()))
            sheet = tracker.reference_sheet[root_index];
        cplx<R> root = tracker.continue_root([&](const cvec<R>& Y) { return base(f, Y); }, X, sheet);
        if (tracker.fault_factor == root_index) root = -root;
        v *= f.power2 == 1 ? root : cplx<R>(1) / root;
        ++root_index;
    }
    return v;
}

template <class R>
cplx<R> Eigenfunction<R>::shift_ratio(const cvec<R>& X, std::size_t var, const cplx<R>& delta,
                                      bool closure, bool squared) const {
    cvec<R> Xs = X;
    Xs[var] += delta;
    cplx<R> total(1);
    for (const auto& f : factors) {
        bool touches = false;
        for (const auto& a : f.atoms)
            for (const auto& [idx, c] : a.coeffs) touches = touches || (idx == var && c != 0);
        if (!touches) continue;
        if (!squared && f.power2 != 2)
            throw BranchError("shift ratio of a square-rooted factor needs a branch choice");
        cplx<R> fr(1);
        if (!closure) {
            fr = base(f, Xs) / base(f, X);
        } else {
            for (const auto& a : f.atoms) {
                int coef = 0;
                for (const auto& [idx, c] : a.coeffs)
                    if (idx == var) coef += c;
                if (coef == 0) continue;
                const cplx<R> u = a.argument(X);
                const cplx<R> du = delta * R(coef);
                cplx<R> r(1);
                if (a.kind == Atom<R>::Kind::S) {
                    r = s_eval(cs, cplx<R>(u + du), policy) / s_denominator(cs, u, policy, "closure");
                } else {
                    const cplx<R> ia = mul_i<R>(a.alpha);
                    const cplx<R> kc = du / ia;
                    const long k = nearest_int<R>(kc.real());
                    if (abs(kc - cplx<R>(R(k))) > R(1e-9) * (R(1) + abs(kc)))
                        throw DomainError("closure: shift is not an integer multiple of i alpha");
                    const cplx<R> c = functional_eq_constant(cs, a.alpha, policy);
                    // G(u + (j+1) i alpha) / G(u + j i alpha) = c s(u + i alpha/2 + j i alpha)
                    for (long j = 0; j < k; ++j)
                        r *= c * s_eval(cs, cplx<R>(u + ia / R(2) + ia * R(j)), policy);
                    for (long j = 1; j <= -k; ++j)
                        r /= c * s_denominator(cs, cplx<R>(u - ia / R(2) - ia * R(j - 1)), policy,
                                               "closure");
                }
                fr *= ipow<R>(r, a.exponent);
            }
        }
        total *= squared ? ipow<R>(fr, f.power2) : fr;
    }
    return total;
}

template <class R>
cplx<R> Eigenfunction<R>::closure_ratio_squared(const cvec<R>& X, std::size_t var,
                                                const cplx<R>& delta) const {
    return shift_ratio(X, var, delta, true, true);
}

template <class R>
cplx<R> Eigenfunction<R>::direct_ratio_squared(const cvec<R>& X, std::size_t var,
                                               const cplx<R>& delta) const {
    return shift_ratio(X, var, delta, false, true);
}

template <class R>
cplx<R> Eigenfunction<R>::closure_ratio(const cvec<R>& X, std::size_t var, const cplx<R>& delta) const {
    return shift_ratio(X, var, delta, true, false);
}

template <class R>
cplx<R> Eigenfunction<R>::direct_ratio(const cvec<R>& X, std::size_t var, const cplx<R>& delta) const {
    return shift_ratio(X, var, delta, false, false);
}

template <class R>
void Eigenfunction<R>::append(const Eigenfunction& other, const std::vector<std::size_t>& index_map) {
    for (Factor<R> f : other.factors) {
        for (auto& a : f.atoms)
            for (auto& [idx, c] : a.coeffs) idx = index_map.at(idx);
        factors.push_back(std::move(f));
    }
}

template <class R>
cplx<R> psi_squared(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cplx<R>& x, MassTag m,
                    const TruncationPolicy& policy) {
    Eigenfunction<R> F;
    F.cs = cs;
    F.policy = policy;
    F.arity = 1;
    F.factors.push_back(psi_factor(cp, 0, m));
    return F.base(F.factors[0], cvec<R>{x});
}

template <class R>
Eigenfunction<R> source_eigenfunction(const Configuration<R>& config) {
    Eigenfunction<R> F;
    F.cs = config.cs;
    F.policy = config.policy;
    F.arity = config.X.size();
    const auto& cp = config.couplings;
    for (std::size_t J = 0; J < F.arity; ++J) F.factors.push_back(psi_factor(cp, J, config.masses[J]));
    for (std::size_t J = 0; J < F.arity; ++J)
        for (std::size_t K = J + 1; K < F.arity; ++K)
            for (int e1 : {1, -1})
                for (int e2 : {1, -1})
                    F.factors.push_back(phi_factor(cp, J, K, e1, e2, config.masses[J], config.masses[K]));
    return F;
}

template <class R>
Eigenfunction<R> groundstate_function(const CaseParams<R>& cs, const CouplingSet<R>& cp, int N,
                                      const TruncationPolicy& policy) {
    Eigenfunction<R> F;
    F.cs = cs;
    F.policy = policy;
    F.arity = static_cast<std::size_t>(N);
    const R& beta = cp.beta;
    const cplx<R> alpha(beta, R(0));
    const cplx<R> hb(R(0), beta / R(2));
    for (std::size_t j = 0; j < F.arity; ++j) {
        Factor<R> f;
        f.label = "Psi_single" + std::to_string(j + 1);
        f.power2 = 1;
        f.atoms.push_back(gamma_atom<R>({{j, 2}}, hb, alpha, 1));
        f.atoms.push_back(gamma_atom<R>({{j, -2}}, hb, alpha, 1));
        for (const R& g : cp.g) {
            const cplx<R> off = hb - cplx<R>(R(0), g * beta);
            f.atoms.push_back(gamma_atom<R>({{j, 1}}, off, alpha, -1));
            f.atoms.push_back(gamma_atom<R>({{j, -1}}, off, alpha, -1));
        }
        F.factors.push_back(std::move(f));
    }
    for (std::size_t j = 0; j < F.arity; ++j) {
        for (std::size_t k = j + 1; k < F.arity; ++k) {
            for (int e1 : {1, -1}) {
                for (int e2 : {1, -1}) {
                    Factor<R> f;
                    f.label = "Psi_pair" + std::to_string(j + 1) + std::to_string(k + 1);
                    f.power2 = 1;
                    f.atoms.push_back(gamma_atom<R>({{j, e1}, {k, e2}}, hb, alpha, 1));
                    f.atoms.push_back(gamma_atom<R>({{j, e1}, {k, e2}},
                                                    hb - cplx<R>(R(0), cp.lambda * beta), alpha, -1));
                    F.factors.push_back(std::move(f));
                }
            }
        }
    }
    return F;
}

template <class R>
Eigenfunction<R> deformed_groundstate_function(const CaseParams<R>& cs, const CouplingSet<R>& cp,
                                               int N, int Nt, const TruncationPolicy& policy) {
    Eigenfunction<R> F;
    F.cs = cs;
    F.policy = policy;
    F.arity = static_cast<std::size_t>(N + Nt);
    F.append(groundstate_function(cs, cp, N, policy), iota_from<R>(0, N));
    F.append(groundstate_function(cs, deformed_partner(cp), Nt, policy), iota_from<R>(N, Nt));
    const cplx<R> off(R(0), (cp.lambda - R(1)) * cp.beta / R(2));
    for (int j = 0; j < N; ++j) {
        for (int k = 0; k < Nt; ++k) {
            for (int d : {1, -1}) {
                Factor<R> f;
                f.label = "cross" + std::to_string(j + 1) + std::to_string(k + 1);
                f.power2 = -1;
                const std::vector<std::pair<std::size_t, int>> co{{std::size_t(j), 1},
                                                                  {std::size_t(N + k), d}};
                f.atoms.push_back(s_atom<R>(co, off, 1));
                f.atoms.push_back(s_atom<R>(co, -off, 1));
                F.factors.push_back(std::move(f));
            }
        }
    }
    return F;
}

namespace {

template <class R>
void add_gamma_block(Eigenfunction<R>& F, std::size_t a0, int na, std::size_t b0, int nb,
                     const cplx<R>& offset, const cplx<R>& alpha, const char* label) {
    for (int j = 0; j < na; ++j)
        for (int k = 0; k < nb; ++k)
            for (int e1 : {1, -1})
                for (int e2 : {1, -1}) {
                    Factor<R> f;
                    f.label = label;
                    f.power2 = 2;
                    f.atoms.push_back(gamma_atom<R>({{a0 + j, e1}, {b0 + k, e2}}, offset, alpha, 1));
                    F.factors.push_back(std::move(f));
                }
}

template <class R>
void add_s_block(Eigenfunction<R>& F, std::size_t a0, int na, std::size_t b0, int nb, const char* label) {
    for (int j = 0; j < na; ++j)
        for (int k = 0; k < nb; ++k)
            for (int d : {1, -1}) {
                Factor<R> f;
                f.label = label;
                f.power2 = 2;
                f.atoms.push_back(s_atom<R>({{a0 + j, 1}, {b0 + k, d}}, cplx<R>(0), 1));
                F.factors.push_back(std::move(f));
            }
}

}  // namespace

template <class R>
Eigenfunction<R> cauchy_interaction(const CaseParams<R>& cs, const CouplingSet<R>& cp, int N, int M,
                                    const TruncationPolicy& policy) {
    Eigenfunction<R> F;
    F.cs = cs;
    F.policy = policy;
    F.arity = static_cast<std::size_t>(N + M);
    add_gamma_block<R>(F, 0, N, N, M, cplx<R>(R(0), -cp.lambda * cp.beta / R(2)),
                       cplx<R>(cp.beta, R(0)), "G(x,y)");
    return F;
}

template <class R>
Eigenfunction<R> dual_cauchy_interaction(const CaseParams<R>& cs, int N, int Mt,
                                         const TruncationPolicy& policy) {
    Eigenfunction<R> F;
    F.cs = cs;
    F.policy = policy;
    F.arity = static_cast<std::size_t>(N + Mt);
    add_s_block<R>(F, 0, N, N, Mt, "s(x,yt)");
    return F;
}

template <class R>
Eigenfunction<R> deformed_interaction(const CaseParams<R>& cs, const CouplingSet<R>& cp,
                                      const ParticleCounts& n, const TruncationPolicy& policy) {
    Eigenfunction<R> F;
    F.cs = cs;
    F.policy = policy;
    F.arity = static_cast<std::size_t>(n.N + n.Nt + n.M + n.Mt);
    const std::size_t x0 = 0, xt0 = n.N, y0 = n.N + n.Nt, yt0 = n.N + n.Nt + n.M;
    add_gamma_block<R>(F, x0, n.N, y0, n.M, cplx<R>(R(0), -cp.lambda * cp.beta / R(2)),
                       cplx<R>(cp.beta, R(0)), "G(x,y)");
    add_s_block<R>(F, x0, n.N, yt0, n.Mt, "s(x,yt)");
    add_s_block<R>(F, xt0, n.Nt, y0, n.M, "s(xt,y)");
    add_gamma_block<R>(F, xt0, n.Nt, yt0, n.Mt, cplx<R>(R(0), -cp.beta / R(2)),
                       cplx<R>(cp.lambda * cp.beta, R(0)), "G(xt,yt)");
    return F;
}

template <class R>
Eigenfunction<R> kernel_cauchy_function(const CaseParams<R>& cs, const CouplingSet<R>& cp, int N,
                                        int M, const TruncationPolicy& policy) {
    Eigenfunction<R> F = cauchy_interaction(cs, cp, N, M, policy);
    F.append(groundstate_function(cs, cp, N, policy), iota_from<R>(0, N));
    F.append(groundstate_function(cs, kernel_partner(cp), M, policy), iota_from<R>(N, M));
    return F;
}

template <class R>
Eigenfunction<R> kernel_dual_cauchy_function(const CaseParams<R>& cs, const CouplingSet<R>& cp,
                                             int N, int Mt, const TruncationPolicy& policy) {
    Eigenfunction<R> F = dual_cauchy_interaction(cs, N, Mt, policy);
    F.append(groundstate_function(cs, cp, N, policy), iota_from<R>(0, N));
    F.append(groundstate_function(cs, dual_partner(cp), Mt, policy), iota_from<R>(N, Mt));
    return F;
}

template <class R>
Eigenfunction<R> kernel_deformed_function(const CaseParams<R>& cs, const CouplingSet<R>& cp,
                                          const ParticleCounts& n, const TruncationPolicy& policy) {
    Eigenfunction<R> F = deformed_interaction(cs, cp, n, policy);
    F.append(deformed_groundstate_function(cs, cp, n.N, n.Nt, policy), iota_from<R>(0, n.N + n.Nt));
    F.append(deformed_groundstate_function(cs, kernel_partner(cp), n.M, n.Mt, policy),
             iota_from<R>(n.N + n.Nt, n.M + n.Mt));
    return F;
}

template <class R>
cplx<R> psi_single(const Configuration<R>& config, const cplx<R>& x, MassTag m,
                   const BranchTracker<R>& branch) {
    Eigenfunction<R> F;
    F.cs = config.cs;
    F.policy = config.policy;
    F.arity = 1;
    F.factors.push_back(psi_factor(config.couplings, 0, m));
    return F.value(cvec<R>{x}, branch);
}

template <class R>
cplx<R> phi_pair(const Configuration<R>& config, const cplx<R>& x, MassTag m, MassTag mp,
                 const BranchTracker<R>& branch) {
    // phi depends on x only through eps X_J + eps' X_K; evaluate with X_K = 0.
    Eigenfunction<R> F;
    F.cs = config.cs;
    F.policy = config.policy;
    F.arity = 2;
    F.factors.push_back(phi_factor(config.couplings, 0, 1, 1, 1, m, mp));
    BranchTracker<R> tr = branch;
    if (tr.reference_point.size() == 1) tr.reference_point.push_back(cplx<R>(0));
    return F.value(cvec<R>{x, cplx<R>(0)}, tr);
}

template <class R>
cplx<R> Phi_total(const Configuration<R>& config, const BranchTracker<R>& branch) {
    return source_eigenfunction(config).value(config.X, branch);
}

template <class R>
cplx<R> groundstate_Psi(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                        const BranchTracker<R>& branch, const TruncationPolicy& policy) {
    return groundstate_function(cs, cp, static_cast<int>(x.size()), policy).value(x, branch);
}

template <class R>
cplx<R> deformed_groundstate(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                             const cvec<R>& xt, const BranchTracker<R>& branch,
                             const TruncationPolicy& policy) {
    cvec<R> all = x;
    all.insert(all.end(), xt.begin(), xt.end());
    return deformed_groundstate_function(cs, cp, int(x.size()), int(xt.size()), policy).value(all, branch);
}

template <class R>
cplx<R> kernel_cauchy(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                      const cvec<R>& y, const BranchTracker<R>& branch, const TruncationPolicy& policy) {
    cvec<R> all = x;
    all.insert(all.end(), y.begin(), y.end());
    return kernel_cauchy_function(cs, cp, int(x.size()), int(y.size()), policy).value(all, branch);
}

template <class R>
cplx<R> kernel_dual_cauchy(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                           const cvec<R>& yt, const BranchTracker<R>& branch,
                           const TruncationPolicy& policy) {
    cvec<R> all = x;
    all.insert(all.end(), yt.begin(), yt.end());
    return kernel_dual_cauchy_function(cs, cp, int(x.size()), int(yt.size()), policy).value(all, branch);
}

template <class R>
cplx<R> kernel_deformed(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                        const cvec<R>& xt, const cvec<R>& y, const cvec<R>& yt,
                        const BranchTracker<R>& branch, const TruncationPolicy& policy) {
    cvec<R> all = x;
    all.insert(all.end(), xt.begin(), xt.end());
    all.insert(all.end(), y.begin(), y.end());
    all.insert(all.end(), yt.begin(), yt.end());
    const ParticleCounts n{int(x.size()), int(xt.size()), int(y.size()), int(yt.size())};
    return kernel_deformed_function(cs, cp, n, policy).value(all, branch);
}

template <class R>
R ratio_constancy(const Eigenfunction<R>& F, const Eigenfunction<R>& G,
                  const std::vector<cvec<R>>& points) {
    if (points.empty()) return R(0);
    const cplx<R> ref = F.squared(points[0]) / G.squared(points[0]);
    R spread(0);
    for (std::size_t i = 1; i < points.size(); ++i) {
        const cplx<R> r = F.squared(points[i]) / G.squared(points[i]);
        spread = std::max(spread, R(abs(r - ref) / abs(ref)));
    }
    return spread;
}

#define KVD_INSTANTIATE(R)                                                                          \
    template struct Atom<R>;                                                                        \
    template struct BranchTracker<R>;                                                               \
    template class Eigenfunction<R>;                                                                \
    template cplx<R> psi_squared<R>(const CaseParams<R>&, const CouplingSet<R>&, const cplx<R>&,    \
                                    MassTag, const TruncationPolicy&);                              \
    template Eigenfunction<R> source_eigenfunction<R>(const Configuration<R>&);                     \
    template Eigenfunction<R> groundstate_function<R>(const CaseParams<R>&, const CouplingSet<R>&,  \
                                                      int, const TruncationPolicy&);                \
    template Eigenfunction<R> deformed_groundstate_function<R>(                                     \
        const CaseParams<R>&, const CouplingSet<R>&, int, int, const TruncationPolicy&);            \
    template Eigenfunction<R> cauchy_interaction<R>(const CaseParams<R>&, const CouplingSet<R>&,    \
                                                    int, int, const TruncationPolicy&);             \
    template Eigenfunction<R> dual_cauchy_interaction<R>(const CaseParams<R>&, int, int,            \
                                                         const TruncationPolicy&);                  \
    template Eigenfunction<R> deformed_interaction<R>(const CaseParams<R>&, const CouplingSet<R>&,  \
                                                      const ParticleCounts&,                        \
                                                      const TruncationPolicy&);                     \
    template Eigenfunction<R> kernel_cauchy_function<R>(const CaseParams<R>&,                       \
                                                        const CouplingSet<R>&, int, int,            \
                                                        const TruncationPolicy&);                   \
    template Eigenfunction<R> kernel_dual_cauchy_function<R>(const CaseParams<R>&,                  \
                                                             const CouplingSet<R>&, int, int,       \
                                                             const TruncationPolicy&);              \
    template Eigenfunction<R> kernel_deformed_function<R>(const CaseParams<R>&,                     \
                                                          const CouplingSet<R>&,                    \
                                                          const ParticleCounts&,                    \
                                                          const TruncationPolicy&);                 \
    template cplx<R> psi_single<R>(const Configuration<R>&, const cplx<R>&, MassTag,                \
                                   const BranchTracker<R>&);                                        \
    template cplx<R> phi_pair<R>(const Configuration<R>&, const cplx<R>&, MassTag, MassTag,         \
                                 const BranchTracker<R>&);                                          \
    template cplx<R> Phi_total<R>(const Configuration<R>&, const BranchTracker<R>&);                \
    template cplx<R> groundstate_Psi<R>(const CaseParams<R>&, const CouplingSet<R>&,                \
                                        const cvec<R>&, const BranchTracker<R>&,                    \
                                        const TruncationPolicy&);                                   \
    template cplx<R> deformed_groundstate<R>(const CaseParams<R>&, const CouplingSet<R>&,           \
                                             const cvec<R>&, const cvec<R>&,                        \
                                             const BranchTracker<R>&, const TruncationPolicy&);     \
    template cplx<R> kernel_cauchy<R>(const CaseParams<R>&, const CouplingSet<R>&, const cvec<R>&,  \
                                      const cvec<R>&, const BranchTracker<R>&,                      \
                                      const TruncationPolicy&);                                     \
    template cplx<R> kernel_dual_cauchy<R>(const CaseParams<R>&, const CouplingSet<R>&,             \
                                           const cvec<R>&, const cvec<R>&,                          \
                                           const BranchTracker<R>&, const TruncationPolicy&);       \
    template cplx<R> kernel_deformed<R>(const CaseParams<R>&, const CouplingSet<R>&,                \
                                        const cvec<R>&, const cvec<R>&, const cvec<R>&,             \
                                        const cvec<R>&, const BranchTracker<R>&,                    \
                                        const TruncationPolicy&);                                   \
    template R ratio_constancy<R>(const Eigenfunction<R>&, const Eigenfunction<R>&,                 \
                                  const std::vector<cvec<R>>&);

KVD_INSTANTIATE(double)
KVD_INSTANTIATE(ext_real)

}  // namespace kvd
