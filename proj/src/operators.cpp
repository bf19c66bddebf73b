#include "kvd/operators.hpp"

#include <sstream>

#include "kvd/errors.hpp"
#include "numeric.hpp"

namespace kvd {

using namespace detail;

std::string_view to_string(MassTag tag) {
    switch (tag) {
        case MassTag::P1: return "P1";
        case MassTag::M1: return "M1";
        case MassTag::P_INV_L: return "P_INV_L";
        case MassTag::M_INV_L: return "M_INV_L";
    }
    return "?";
}

MassTag parse_mass(std::string_view text) {
    if (text == "P1" || text == "1" || text == "+1") return MassTag::P1;
    if (text == "M1" || text == "-1") return MassTag::M1;
    if (text == "P_INV_L" || text == "+1/l" || text == "1/l") return MassTag::P_INV_L;
    if (text == "M_INV_L" || text == "-1/l") return MassTag::M_INV_L;
    throw ConfigError("unknown mass tag '" + std::string(text) +
                      "' (expected P1, M1, P_INV_L or M_INV_L)");
}

std::vector<MassTag> parse_masses(std::string_view list) {
    std::vector<MassTag> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const std::size_t end = list.find(',', start);
        const auto item = list.substr(start, end == std::string_view::npos ? end : end - start);
        if (!item.empty()) out.push_back(parse_mass(item));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

template <class R>
R mass_value(MassTag tag, const R& lambda) {
    switch (tag) {
        case MassTag::P1: return R(1);
        case MassTag::M1: return R(-1);
        case MassTag::P_INV_L: return R(1) / lambda;
        case MassTag::M_INV_L: return R(-1) / lambda;
    }
    return R(0);
}

MassRelation relate(MassTag m, MassTag mp) {
    auto positive = [](MassTag t) { return t == MassTag::P1 || t == MassTag::P_INV_L; };
    auto unit = [](MassTag t) { return t == MassTag::P1 || t == MassTag::M1; };
    const bool same_family = unit(m) == unit(mp);
    const bool same_sign = positive(m) == positive(mp);
    if (same_family) return same_sign ? MassRelation::Same : MassRelation::Negated;
    return same_sign ? MassRelation::Dual : MassRelation::NegatedDual;
}

std::string_view to_string(ConstantKind kind) {
    switch (kind) {
        case ConstantKind::Source: return "source";
        case ConstantKind::C0: return "c0";
        case ConstantKind::EN: return "E_N";
        case ConstantKind::CNM: return "C_NM";
        case ConstantKind::CtNMt: return "Ct_NMt";
        case ConstantKind::ENNt: return "E_NNt";
        case ConstantKind::CNNtMMt: return "C_NNtMMt";
    }
    return "?";
}

std::string_view to_string(BalanceKind kind) {
    switch (kind) {
        case BalanceKind::Theorem: return "theorem";
        case BalanceKind::Cor1: return "cor1";
        case BalanceKind::Cor2: return "cor2";
        case BalanceKind::Cor3: return "cor3";
        case BalanceKind::Cor4: return "cor4";
        case BalanceKind::Cor6: return "cor6";
    }
    return "?";
}

template <class R>
R CouplingSet<R>::gsum() const {
    R t(0);
    for (const auto& v : g) t += v;
    return t;
}

template <class R>
void CouplingSet<R>::validate(const CaseParams<R>& cs) const {
    const std::size_t want = static_cast<std::size_t>(2 * cs.rho + 2);
    if (g.size() != want)
        throw ConfigError("couplings.g: case " + std::string(to_string(cs.kind)) + " needs " +
                          std::to_string(want) + " values, got " + std::to_string(g.size()));
    if (lambda == R(0)) throw ConfigError("couplings.lambda: must be nonzero");
    if (beta == R(0)) throw ConfigError("couplings.beta: must be nonzero");
}

template <class R>
IncommensurabilityReport check_incommensurable(const CaseParams<R>& cs, const CouplingSet<R>& cp,
                                               const TruncationPolicy& policy, int k_check) {
    IncommensurabilityReport rep;
    for (MassTag tag : {MassTag::P1, MassTag::M1, MassTag::P_INV_L, MassTag::M_INV_L}) {
        const R m = mass_value(tag, cp.lambda);
        for (int k = 1; k <= k_check; ++k) {
            const cplx<R> pt(R(0), R(k) * cp.beta / m);
            if (lattice_distance(cs, pt) < R(policy.pole_floor)) {
                rep.ok = false;
                std::ostringstream os;
                os << k << " i beta/m lies on the zero lattice for m = " << to_string(tag);
                rep.detail = os.str();
                return rep;
            }
        }
    }
    return rep;
}

template <class R>
std::vector<R> Configuration<R>::mass_values() const {
    std::vector<R> out;
    out.reserve(masses.size());
    for (MassTag t : masses) out.push_back(mass_value(t, couplings.lambda));
    return out;
}

template <class R>
R Configuration<R>::mass_sum() const {
    R t(0);
    for (MassTag tag : masses) t += mass_value(tag, couplings.lambda);
    return t;
}

template <class R>
R Configuration<R>::balance_defect() const {
    return R(2) * couplings.lambda * mass_sum() + couplings.gsum() - R(2) * (couplings.lambda + R(1));
}

template <class R>
bool Configuration<R>::balanced(double tol) const {
    return abs(balance_defect()) < R(tol);
}

template <class R>
void Configuration<R>::validate() const {
    couplings.validate(cs);
    if (X.size() != masses.size())
        throw ConfigError("configuration: " + std::to_string(X.size()) + " coordinates for " +
                          std::to_string(masses.size()) + " masses");
    const R floor = R(policy.pole_floor);
    for (std::size_t J = 0; J < X.size(); ++J) {
        if (lattice_distance(cs, X[J]) < floor)
            throw DomainError("configuration: X_" + std::to_string(J + 1) + " is on the zero lattice");
        for (std::size_t K = J + 1; K < X.size(); ++K) {
            if (lattice_distance(cs, cplx<R>(X[J] - X[K])) < floor ||
                lattice_distance(cs, cplx<R>(X[J] + X[K])) < floor)
                throw DomainError("configuration: X_" + std::to_string(J + 1) + " = +-X_" +
                                  std::to_string(K + 1) + " modulo the zero lattice");
        }
    }
}

template <class R>
cplx<R> s_denominator(const CaseParams<R>& cs, const cplx<R>& arg, const TruncationPolicy& policy,
                      const char* what) {
    if (lattice_distance(cs, arg) < R(policy.pole_floor))
        throw DomainError(std::string(what) + ": denominator s(" + fmt_c<R>(arg) +
                          ") within pole_floor of a zero");
    return s_eval(cs, arg, policy);
}

template <class R>
R d_param(const R& g, MassTag m, const R& lambda) {
    if (m == MassTag::P1 || m == MassTag::P_INV_L) return g;
    return g - (lambda + R(1)) / R(2);
}

template <class R>
cplx<R> f_pm(const CaseParams<R>& cs, const cplx<R>& x, const R& m, const R& mp,
             const CouplingSet<R>& cp, int sign, const TruncationPolicy& policy) {
    const R& lam = cp.lambda;
    const R& beta = cp.beta;
    const R theta = (m - mp) * (lam * m * mp - R(1)) * beta / (R(4) * m * mp);
    const cplx<R> base = x - cplx<R>(R(0), R(sign) * theta);
    return s_eval(cs, cplx<R>(base - cplx<R>(R(0), R(sign) * lam * mp * beta)), policy) /
           s_denominator(cs, base, policy, "f_pm");
}

template <class R>
cplx<R> coeff_V_shift(const Configuration<R>& config, std::size_t J, int sign) {
    const auto& cs = config.cs;
    const auto& cp = config.couplings;
    const auto& pol = config.policy;
    const std::vector<R> ms = config.mass_values();
    const R m = ms[J];
    const cplx<R> x = config.X[J];
    const cplx<R> sx = x * R(sign);
    cplx<R> v(1);
    for (const R& g : cp.g) {
        const R dg = d_param(g, config.masses[J], cp.lambda);
        v *= s_eval(cs, cplx<R>(sx - cplx<R>(R(0), dg * cp.beta)), pol);
    }
    v /= s_denominator(cs, cplx<R>(sx * R(2)), pol, "V_shift");
    v /= s_denominator(cs, cplx<R>(sx * R(2) - cplx<R>(R(0), cp.beta / m)), pol, "V_shift");
    for (std::size_t K = 0; K < config.X.size(); ++K) {
        if (K == J) continue;
        for (int delta : {1, -1}) {
            v *= f_pm(cs, cplx<R>(x + config.X[K] * R(delta)), m, ms[K], cp, sign, pol);
        }
    }
    return v;
}

template <class R>
cplx<R> coeff_V0(const Configuration<R>& config, R* largest_term) {
    const auto& cs = config.cs;
    const auto& cp = config.couplings;
    const auto& pol = config.policy;
    const std::vector<R> ms = config.mass_values();
    const R& lam = cp.lambda;
    const R& beta = cp.beta;
    const int rho = cs.rho;
    const auto& om = cs.omega;
    const cplx<R> i = imag_unit<R>();
    R msum(0);
    for (const R& m : ms) msum += m;
    const R expo_arg = R(2) * lam * msum + cp.gsum() - R(rho + 1) * (lam + R(1)) / R(2);

    const R pref = abs(cs.half_period_prefactor(pol));
    R largest(0);
    cplx<R> total(0);
    for (int nu = 0; nu <= rho; ++nu) {
        const cplx<R> half = om[nu] / R(2);
        const R e = exp(-cs.r * R(cs.xi[nu]) * expo_arg * beta);
        cplx<R> den0(1);
        for (int mu = 0; mu <= rho; ++mu)
            if (mu != nu) den0 *= s_denominator(cs, cplx<R>((om[nu] - om[mu]) / R(2)), pol, "V0");

        cplx<R> t1(1), t2(1);
        for (const R& g : cp.g) {
            t1 *= s_eval(cs, cplx<R>(half + i * (beta / R(2) - g * beta)), pol);
            t2 *= s_eval(cs, cplx<R>(half + i * (lam * beta / R(2) - g * beta)), pol);
        }
        for (int mu = 0; mu <= rho; ++mu) {
            t1 /= s_denominator(cs, cplx<R>((om[nu] - om[mu] + i * ((R(1) - lam) * beta)) / R(2)), pol, "V0");
            t2 /= s_denominator(cs, cplx<R>((om[nu] - om[mu] + i * ((lam - R(1)) * beta)) / R(2)), pol, "V0");
        }
        for (std::size_t J = 0; J < config.X.size(); ++J) {
            const R m = ms[J];
            const cplx<R> sh1 = i * ((lam * (m - R(1)) + R(1) / m + R(1)) * beta / R(4));
            const cplx<R> sh2 = i * ((lam * (m + R(1)) + R(1) / m - R(1)) * beta / R(4));
            const cplx<R> shift = i * (lam * m * beta);
            for (int delta : {1, -1}) {
                const cplx<R> u = config.X[J] * R(delta) + half;
                t1 *= s_eval(cs, cplx<R>(u + sh1 - shift), pol) / s_denominator(cs, cplx<R>(u + sh1), pol, "V0");
                t2 *= s_eval(cs, cplx<R>(u + sh2 - shift), pol) / s_denominator(cs, cplx<R>(u + sh2), pol, "V0");
            }
        }
        largest = std::max({largest, R(pref * abs(t1 * e / den0)), R(pref * abs(t2 * e / den0))});
        total += (t1 + t2) * e / den0;
    }
    if (largest_term) *largest_term = largest;
    return -cs.half_period_prefactor(pol) * total;
}

template <class R>
cplx<R> a_of_m(const R& m, const CouplingSet<R>& cp) {
    return cplx<R>(R(0), -cp.lambda * cp.beta / R(4) * (m + R(1) / (cp.lambda * m)));
}

template <class R>
Application<R> apply_conjugated_operator(const Configuration<R>& config, const TestFunction<R>& fn) {
    const auto& cs = config.cs;
    const auto& cp = config.couplings;
    const std::vector<R> ms = config.mass_values();
    R largest(0);
    const cplx<R> f0 = fn(config.X);
    const cplx<R> v0 = coeff_V0(config, &largest) * f0;
    Application<R> out{v0, std::max(R(abs(v0)), R(largest * abs(f0)))};
    for (std::size_t J = 0; J < config.X.size(); ++J) {
        const cplx<R> lead = s_eval(cs, cplx<R>(R(0), cp.lambda * ms[J] * cp.beta), config.policy);
        for (int eps : {1, -1}) {
            cvec<R> shifted = config.X;
            shifted[J] -= cplx<R>(R(0), R(eps) * cp.beta / ms[J]);
            const cplx<R> term = lead * coeff_V_shift(config, J, eps) * fn(shifted);
            out.value += term;
            out.scale = std::max(out.scale, R(abs(term)));
        }
    }
    return out;
}

template <class R>
cplx<R> eigen_constant(const CaseParams<R>& cs, const CouplingSet<R>& cp, ConstantKind kind,
                       const ParticleCounts& n, const R& mass_sum, const TruncationPolicy& policy) {
    const R& lam = cp.lambda;
    const R& beta = cp.beta;
    const int rho = cs.rho;
    const R shift = R(rho + 1) * (lam + R(1)) / R(2);
    if (kind == ConstantKind::C0) {
        const auto& om = cs.omega;
        const cplx<R> i = imag_unit<R>();
        cplx<R> total(0);
        for (int nu = 0; nu <= rho; ++nu) {
            const R e = exp(-cs.r * R(cs.xi[nu]) * (cp.gsum() - shift) * beta);
            cplx<R> t(e);
            for (int mu = 0; mu <= rho; ++mu)
                if (mu != nu) t /= s_denominator(cs, cplx<R>((om[nu] - om[mu]) / R(2)), policy, "c0");
            for (const R& g : cp.g)
                t *= s_eval(cs, cplx<R>(om[nu] / R(2) + i * (lam * beta / R(2) - g * beta)), policy);
            for (int mu = 0; mu <= rho; ++mu)
                t /= s_denominator(cs, cplx<R>((om[nu] - om[mu] + i * ((lam - R(1)) * beta)) / R(2)), policy, "c0");
            total += t;
        }
        return cs.half_period_prefactor(policy) * total;
    }
    R k(0);
    switch (kind) {
        case ConstantKind::Source: k = R(2) * lam * mass_sum; break;
        case ConstantKind::EN: k = R(2) * lam * R(n.N); break;
        case ConstantKind::CNM: k = R(2) * lam * R(n.N - n.M); break;
        case ConstantKind::CtNMt: k = R(2) * lam * R(n.N) + R(2 * n.Mt); break;
        case ConstantKind::ENNt: k = R(2) * lam * R(n.N) - R(2 * n.Nt); break;
        case ConstantKind::CNNtMMt: k = R(2) * lam * R(n.N - n.M) - R(2 * (n.Nt - n.Mt)); break;
        case ConstantKind::C0: break;
    }
    const cplx<R> arg = cplx<R>(R(0), beta * (k + cp.gsum() - shift)) - cs.omega_sum();
    cplx<R> value = cs.half_period_prefactor(policy) * s_eval(cs, arg, policy);
    if (kind == ConstantKind::EN || kind == ConstantKind::ENNt)
        value += eigen_constant(cs, cp, ConstantKind::C0, n, mass_sum, policy);
    return value;
}

template <class R>
cplx<R> eigen_constant(const Configuration<R>& config) {
    return eigen_constant(config.cs, config.couplings, ConstantKind::Source, ParticleCounts{},
                          config.mass_sum(), config.policy);
}

template <class R>
R balance_defect(BalanceKind kind, const CouplingSet<R>& cp, const ParticleCounts& n,
                 const R& mass_sum) {
    const R& lam = cp.lambda;
    const R g = cp.gsum();
    switch (kind) {
        case BalanceKind::Theorem: return R(2) * lam * mass_sum + g - R(2) * (lam + R(1));
        case BalanceKind::Cor1: return R(2) * lam * R(n.N - 1) + g - R(2);
        case BalanceKind::Cor2: return R(2) * lam * R(n.N - n.M - 1) + g - R(2);
        case BalanceKind::Cor3: return R(2) * lam * R(n.N - 1) + R(2 * (n.Mt - 1)) + g;
        case BalanceKind::Cor4: return R(2) * lam * R(n.N - 1) - R(2 * (n.Nt + 1)) + g;
        case BalanceKind::Cor6:
            return R(2) * lam * R(n.N - n.M - 1) - R(2 * (n.Nt - n.Mt + 1)) + g;
    }
    return R(0);
}

template <class R>
R balance_solve(BalanceKind kind, const CouplingSet<R>& cp, const ParticleCounts& counts,
                std::size_t free_index, const R& mass_sum) {
    if (free_index >= cp.g.size())
        throw ConfigError("balance_solve: free_index " + std::to_string(free_index) + " out of range");
    // The defect is affine in g[free_index] with unit slope.
    const R defect = balance_defect(kind, cp, counts, mass_sum);
    return cp.g[free_index] - defect;
}

template <class R>
R balance_solve(const CouplingSet<R>& cp, const std::vector<MassTag>& masses, std::size_t free_index) {
    R msum(0);
    for (MassTag t : masses) msum += mass_value(t, cp.lambda);
    return balance_solve(BalanceKind::Theorem, cp, ParticleCounts{}, free_index, msum);
}

template <class R>
void KeyLemmaParams<R>::validate(const CaseParams<R>& cs, std::size_t count,
                                 const TruncationPolicy& policy) const {
    const std::size_t r1 = static_cast<std::size_t>(cs.rho + 1);
    if (a.size() != count) throw ConfigError("key lemma: need one a_J per variable");
    if (c.size() != r1 || d.size() != r1) throw ConfigError("key lemma: c and d need rho + 1 entries");
    if (n.size() != 2 * r1) throw ConfigError("key lemma: n needs 2 rho + 2 entries");
    if (gamma.imag() == R(0)) throw ConfigError("key lemma: Im(gamma) must be nonzero");
    cvec<R> all = c;
    all.insert(all.end(), d.begin(), d.end());
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j)
            if (lattice_distance(cs, cplx<R>(all[i] - all[j])) < R(policy.pole_floor))
                throw ConfigError("key lemma: c and d entries must be distinct modulo the lattice");
}

template <class R>
cplx<R> KeyLemmaParams<R>::balance_defect(const cvec<R>& m) const {
    cplx<R> t(0);
    for (const auto& v : m) t += v;
    t *= gamma * R(2);
    for (const auto& v : n) t += v;
    return t;
}

template <class R>
KeyLemmaSides<R> key_lemma_sides(const CaseParams<R>& cs, const KeyLemmaParams<R>& klp,
                                 const cvec<R>& X, const cvec<R>& m, const TruncationPolicy& pol) {
    const int rho = cs.rho;
    const auto& om = cs.omega;
    const std::size_t N = X.size();
    auto s = [&](const cplx<R>& z) { return s_eval(cs, z, pol); };
    auto sd = [&](const cplx<R>& z) { return s_denominator(cs, z, pol, "key lemma"); };
    const cplx<R>& gam = klp.gamma;
    R scale(0);
    cplx<R> lhs(0);
    for (int e : {1, -1}) {
        const R eps(e);
        for (std::size_t J = 0; J < N; ++J) {
            cplx<R> t = s(gam * m[J]);
            for (std::size_t K = 0; K < N; ++K) {
                if (K == J) continue;
                for (int dl : {1, -1}) {
                    const cplx<R> u = X[J] + X[K] * R(dl);
                    t *= s(u + (klp.a[J] - klp.a[K] - gam * m[K]) * eps) /
                         sd(u + (klp.a[J] - klp.a[K]) * eps);
                }
            }
            for (int v = 0; v <= rho; ++v) {
                const cplx<R> ex = X[J] * eps;
                const cplx<R> hw = om[v] / R(2);
                const cplx<R> bc = ex + klp.a[J] - klp.c[v] - hw;
                const cplx<R> bd = ex + klp.a[J] - klp.d[v] - hw;
                t *= s(ex - gam * m[J] / R(2) - hw) * s(bc - klp.n[v]) * s(bd - klp.n[v + rho + 1]);
                t /= sd(ex - hw) * sd(bc) * sd(bd);
            }
            scale = std::max(scale, R(abs(t)));
            lhs += t;
        }
    }
    for (int v = 0; v <= rho; ++v) {
        cplx<R> A(1), B(1);
        for (std::size_t J = 0; J < N; ++J) {
            for (int dl : {1, -1}) {
                const cplx<R> u = X[J] * R(dl) + om[v] / R(2);
                A *= s(u + klp.c[v] - klp.a[J] - gam * m[J]) / sd(u + klp.c[v] - klp.a[J]);
                B *= s(u + klp.d[v] - klp.a[J] - gam * m[J]) / sd(u + klp.d[v] - klp.a[J]);
            }
        }
        for (int u = 0; u <= rho; ++u) {
            const cplx<R> hw = (om[v] - om[u]) / R(2);
            A *= s(hw + klp.c[v] - klp.c[u] - klp.n[u]);
            if (u != v) A /= sd(hw + klp.c[v] - klp.c[u]);
            A *= s(hw + klp.c[v] - klp.d[u] - klp.n[u + rho + 1]) / sd(hw + klp.c[v] - klp.d[u]);
            B *= s(hw + klp.d[v] - klp.c[u] - klp.n[u]) / sd(hw + klp.d[v] - klp.c[u]);
            B *= s(hw + klp.d[v] - klp.d[u] - klp.n[u + rho + 1]);
            if (u != v) B /= sd(hw + klp.d[v] - klp.d[u]);
        }
        scale = std::max(scale, R(abs(A)));
        scale = std::max(scale, R(abs(B)));
        lhs -= A + B;
    }
    const cplx<R> rhs = s(klp.balance_defect(m));
    scale = std::max(scale, R(abs(rhs)));
    return {lhs, rhs, scale};
}

#define KVD_INSTANTIATE(R)                                                                        \
    template R mass_value<R>(MassTag, const R&);                                                  \
    template struct CouplingSet<R>;                                                               \
    template IncommensurabilityReport check_incommensurable<R>(                                   \
        const CaseParams<R>&, const CouplingSet<R>&, const TruncationPolicy&, int);               \
    template struct Configuration<R>;                                                             \
    template cplx<R> s_denominator<R>(const CaseParams<R>&, const cplx<R>&,                       \
                                      const TruncationPolicy&, const char*);                      \
    template R d_param<R>(const R&, MassTag, const R&);                                           \
    template cplx<R> f_pm<R>(const CaseParams<R>&, const cplx<R>&, const R&, const R&,            \
                             const CouplingSet<R>&, int, const TruncationPolicy&);                \
    template cplx<R> coeff_V_shift<R>(const Configuration<R>&, std::size_t, int);                 \
    template cplx<R> coeff_V0<R>(const Configuration<R>&, R*);                                     \
    template cplx<R> a_of_m<R>(const R&, const CouplingSet<R>&);                                  \
    template Application<R> apply_conjugated_operator<R>(const Configuration<R>&,                 \
                                                         const TestFunction<R>&);                 \
    template cplx<R> eigen_constant<R>(const CaseParams<R>&, const CouplingSet<R>&,               \
                                       ConstantKind, const ParticleCounts&, const R&,             \
                                       const TruncationPolicy&);                                  \
    template cplx<R> eigen_constant<R>(const Configuration<R>&);                                  \
    template R balance_defect<R>(BalanceKind, const CouplingSet<R>&, const ParticleCounts&,       \
                                 const R&);                                                       \
    template R balance_solve<R>(BalanceKind, const CouplingSet<R>&, const ParticleCounts&,        \
                                std::size_t, const R&);                                           \
    template R balance_solve<R>(const CouplingSet<R>&, const std::vector<MassTag>&, std::size_t); \
    template struct KeyLemmaParams<R>;                                                            \
    template KeyLemmaSides<R> key_lemma_sides<R>(const CaseParams<R>&, const KeyLemmaParams<R>&,  \
                                                 const cvec<R>&, const cvec<R>&,                  \
                                                 const TruncationPolicy&);

KVD_INSTANTIATE(double)
KVD_INSTANTIATE(ext_real)

}  // namespace kvd
