#include "kvd/verify.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <type_traits>
#include <thread>
#include <tuple>

#include "kvd/errors.hpp"
#include "numeric.hpp"

namespace kvd {

using namespace detail;

namespace {

struct IdentityName {
    IdentityId id;
    const char* name;
};

constexpr IdentityName kIdentityNames[] = {
    {IdentityId::GammaFE, "gamma-fe"},
    {IdentityId::Reflection, "reflection"},
    {IdentityId::KeyLemma, "key-lemma"},
    {IdentityId::SourceThm, "source"},
    {IdentityId::Lemma1, "lemma1"},
    {IdentityId::Cor1, "cor1"},
    {IdentityId::Cor2, "cor2"},
    {IdentityId::Cor3, "cor3"},
    {IdentityId::Cor4, "cor4"},
    {IdentityId::Cor5, "cor5"},
    {IdentityId::Cor6, "cor6"},
    {IdentityId::QuasiInvariance, "quasi-invariance"},
    {IdentityId::AntiSymmetry, "antisymmetry"},
    {IdentityId::Swap, "swap"},
    {IdentityId::Oddness, "oddness"},
    {IdentityId::QuasiPeriod, "quasi-period"},
    {IdentityId::Duplication, "duplication"},
    {IdentityId::ThetaProduct, "theta-product"},
};

template <class R>
double relative(const cplx<R>& diff, const R& scale) {
    if (scale > R(0)) return to_double<R>(R(abs(diff) / scale));
    return to_double<R>(R(abs(diff)));
}

template <class R>
cvec<R> slice(const cvec<R>& X, int from, int count) {
    return cvec<R>(X.begin() + static_cast<long>(from), X.begin() + static_cast<long>(from + count));
}

}  // namespace

std::string_view to_string(IdentityId id) {
    for (const auto& e : kIdentityNames)
        if (e.id == id) return e.name;
    return "?";
}

IdentityId parse_identity(std::string_view text) {
    for (const auto& e : kIdentityNames)
        if (text == e.name) return e.id;
    throw ConfigError("unknown identity '" + std::string(text) + "'");
}

const std::vector<IdentityId>& all_identities() {
    static const std::vector<IdentityId> ids = [] {
        std::vector<IdentityId> v;
        for (const auto& e : kIdentityNames) v.push_back(e.id);
        return v;
    }();
    return ids;
}

// ---- sampling ------------------------------------------------------------

Sampler::Sampler(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Sampler::next() { return engine_(); }

double Sampler::uniform(double lo, double hi) {
    const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

std::complex<double> Sampler::box(double re_half, double im_half, std::complex<double> center) {
    const double re = uniform(-re_half, re_half);
    const double im = uniform(-im_half, im_half);
    return center + std::complex<double>(re, im);
}

int Sampler::below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
    // FNV-1a over the tag, then a splitmix64 finalizer.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : tag) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::uint64_t z = seed ^ h ^ (index * 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::vector<std::complex<double>> admissible_point(const CaseParams<double>& cs, std::size_t count,
                                                   Sampler& rng, double re_half, double im_half,
                                                   double separation, SampleStats* stats, int max_tries) {
    for (int t = 0; t < max_tries; ++t) {
        std::vector<std::complex<double>> X(count);
        for (auto& x : X) x = rng.box(re_half, im_half);
        bool ok = true;
        for (std::size_t j = 0; j < count && ok; ++j) {
            ok = lattice_distance(cs, X[j]) > separation && lattice_distance(cs, 2.0 * X[j]) > separation;
            for (std::size_t k = j + 1; k < count && ok; ++k)
                ok = lattice_distance(cs, X[j] + X[k]) > separation &&
                     lattice_distance(cs, X[j] - X[k]) > separation;
        }
        if (ok) {
            if (stats) ++stats->accepted;
            return X;
        }
        if (stats) ++stats->rejected;
    }
    throw DomainError("sampler exhausted after " + std::to_string(max_tries) + " rejected points");
}

std::vector<Configuration<double>> sample_admissible(const Configuration<double>& tmpl, int count,
                                                     std::uint64_t seed, SampleStats* stats,
                                                     double re_half, double im_half, double separation) {
    if (count < 1) throw ConfigError("sample count must be at least 1");
    Sampler rng(seed);
    std::vector<Configuration<double>> out;
    for (int i = 0; i < count; ++i) {
        Configuration<double> c = tmpl;
        c.X = admissible_point(tmpl.cs, tmpl.masses.size(), rng, re_half, im_half, separation, stats);
        out.push_back(std::move(c));
    }
    return out;
}

// ---- residuals -----------------------------------------------------------

template <class R>
Residual residual_key_lemma(const CaseParams<R>& cs, const KeyLemmaParams<R>& klp, const cvec<R>& X,
                            const cvec<R>& m, const TruncationPolicy& policy) {
    const auto sides = key_lemma_sides(cs, klp, X, m, policy);
    return {relative<R>(sides.lhs - sides.rhs, sides.scale), to_double<R>(sides.scale)};
}

template <class R>
Residual residual_source(const Configuration<R>& config) {
    const auto app = apply_conjugated_operator<R>(config, [](const cvec<R>&) { return cplx<R>(1); });
    const cplx<R> E = eigen_constant(config);
    const R scale = std::max(app.scale, R(abs(E)));
    return {relative<R>(app.value - E, scale), to_double<R>(scale)};
}

template <class R>
Residual residual_lemma1(const Configuration<R>& config, const TestFunction<R>& fn, const cvec<R>& X0,
                         bool fault) {
    const auto Phi = source_eigenfunction(config);
    BranchTracker<R> tr;
    tr.reference_point = X0;
    BranchTracker<R> trf = tr;
    if (fault) trf.fault_factor = 0;
    const std::size_t n = config.X.size();
    const R& beta = config.couplings.beta;
    const auto mv = config.mass_values();

    auto coeff = [&](const cvec<R>& Y, std::size_t J, int e) {
        Configuration<R> c = config;
        c.X = Y;
        return coeff_V_shift(c, J, e);
    };
    // Q(Y) = sqrt(V^e(Y)) sqrt(V^-e(Y')) Phi(Y')/Phi(Y), which squares to V^e(Y)^2.
    auto root_term = [&](const cvec<R>& Y, std::size_t J, int e, const BranchTracker<R>& phi_tr) {
        cvec<R> Ys = Y;
        Ys[J] -= cplx<R>(R(0), R(e) * beta / mv[J]);
        const cplx<R> a = tr.continue_root([&](const cvec<R>& Z) { return coeff(Z, J, e); }, Y);
        const cplx<R> b = tr.continue_root([&](const cvec<R>& Z) { return coeff(Z, J, -e); }, Ys);
        return a * b * Phi.value(Ys, phi_tr) / Phi.value(Y, tr);
    };

    cplx<R> H(0), A(0);
    R scale(0);
    R largest(0);
    const cplx<R> f0 = fn(config.X);
    const cplx<R> v0 = coeff_V0(config, &largest) * f0;
    H += v0;
    A += v0;
    scale = std::max(R(abs(v0)), R(largest * abs(f0)));
    for (std::size_t J = 0; J < n; ++J) {
        const cplx<R> lead = s_eval(config.cs, cplx<R>(R(0), config.couplings.lambda * mv[J] * beta),
                                    config.policy);
        for (int e : {1, -1}) {
            // Sheet of the coefficient-root pair, fixed once at the reference point.
            const cplx<R> q0 = root_term(X0, J, e, tr) / coeff(X0, J, e);
            const R sheet = q0.real() >= R(0) ? R(1) : R(-1);
            if (abs(q0 - cplx<R>(sheet)) > R(1e-6))
                throw BranchError("lemma 1: reference ratio is not a sign");
            cvec<R> Xs = config.X;
            Xs[J] -= cplx<R>(R(0), R(e) * beta / mv[J]);
            const cplx<R> f = fn(Xs);
            const cplx<R> th = lead * sheet * root_term(config.X, J, e, trf) * f;
            const cplx<R> ta = lead * coeff(config.X, J, e) * f;
            H += th;
            A += ta;
            scale = std::max({scale, R(abs(th)), R(abs(ta))});
        }
    }
    return {relative<R>(H - A, scale), to_double<R>(scale)};
}

template <class R>
TestFunction<R> exponential_test_function(int id, std::size_t arity, std::uint64_t seed) {
    if (id == 0) return [](const cvec<R>&) { return cplx<R>(1); };
    Sampler rng(mix_seed(seed, "test-function", static_cast<std::uint64_t>(id)));
    std::vector<R> k(arity);
    for (auto& v : k) v = R(rng.uniform(-1.5, 1.5));
    return [k](const cvec<R>& X) {
        cplx<R> t(0);
        for (std::size_t j = 0; j < k.size() && j < X.size(); ++j) t += X[j] * k[j];
        return exp(mul_i<R>(t));
    };
}

BalanceKind corollary_balance(int which) {
    switch (which) {
        case 1: return BalanceKind::Cor1;
        case 2: return BalanceKind::Cor2;
        case 3: return BalanceKind::Cor3;
        case 4:
        case 5: return BalanceKind::Cor4;
        case 6: return BalanceKind::Cor6;
    }
    throw ConfigError("corollary must be 1..6");
}

namespace {

// F(moved)/F(base) for a block whose variables start at `offset` in the full vector.
template <class R>
cplx<R> block_ratio(const Eigenfunction<R>& F, const cvec<R>& all, std::size_t offset,
                    const cvec<R>& base, const cvec<R>& moved, RatioMode mode) {
    for (std::size_t j = 0; j < base.size(); ++j) {
        if (moved[j] == base[j]) continue;
        const cplx<R> delta = moved[j] - base[j];
        return mode == RatioMode::Closure ? F.closure_ratio(all, offset + j, delta)
                                          : F.direct_ratio(all, offset + j, delta);
    }
    return cplx<R>(1);
}

// Worst relative mismatch of the squared-groundstate shift ratios against the coefficient ratios.
template <class R>
R groundstate_closure(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                      const cvec<R>& xt, const TruncationPolicy& pol) {
    const auto F = deformed_groundstate_function(cs, cp, int(x.size()), int(xt.size()), pol);
    cvec<R> all = x;
    all.insert(all.end(), xt.begin(), xt.end());
    R worst(0);
    auto check = [&](const cplx<R>& got, const cplx<R>& want) {
        worst = std::max(worst, R(abs(got - want) / std::max(abs(got), abs(want))));
    };
    for (int e : {1, -1}) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            const cplx<R> d(R(0), -R(e) * cp.beta);
            cvec<R> xs = x;
            xs[j] += d;
            check(F.closure_ratio_squared(all, j, d),
                  deformed_V_shift(cs, x, xt, cp, j, e, pol) / deformed_V_shift(cs, xs, xt, cp, j, -e, pol));
        }
        for (std::size_t k = 0; k < xt.size(); ++k) {
            const cplx<R> d(R(0), R(e) * cp.lambda * cp.beta);
            cvec<R> ys = xt;
            ys[k] += d;
            check(F.closure_ratio_squared(all, x.size() + k, d),
                  deformed_Vt_shift(cs, x, xt, cp, k, e, pol) / deformed_Vt_shift(cs, x, ys, cp, k, -e, pol));
        }
    }
    return worst;
}

}  // namespace

template <class R>
Residual residual_corollary(const CaseParams<R>& cs, const CouplingSet<R>& cp, int which,
                            const ParticleCounts& n, const cvec<R>& X, RatioMode mode,
                            const TruncationPolicy& pol) {
    if (X.size() != std::size_t(n.N + n.Nt + n.M + n.Mt))
        throw ConfigError("corollary: point size does not match the particle counts");
    const bool need_no_xt = which == 1 || which == 2 || which == 3;
    const bool need_no_y = which == 1 || which == 3 || which == 4 || which == 5;
    const bool need_no_yt = which == 1 || which == 2 || which == 4 || which == 5;
    if ((need_no_xt && n.Nt) || (need_no_y && n.M) || (need_no_yt && n.Mt))
        throw ConfigError("corollary " + std::to_string(which) + ": unused particle block is not empty");
    const cvec<R> x = slice<R>(X, 0, n.N);
    const cvec<R> xt = slice<R>(X, n.N, n.Nt);
    const cvec<R> y = slice<R>(X, n.N + n.Nt, n.M);
    const cvec<R> yt = slice<R>(X, n.N + n.Nt + n.M, n.Mt);
    const auto one_block = [](const cvec<R>&, const cvec<R>&) { return cplx<R>(1); };

    switch (which) {
        case 1:
        case 4:
        case 5: {
            const auto app = which == 1
                ? apply_vd<R>(cs, x, cp, [](const cvec<R>&) { return cplx<R>(1); }, pol)
                : apply_deformed<R>(cs, x, xt, cp, one_block, pol);
            const cplx<R> E = eigen_constant(cs, cp, which == 1 ? ConstantKind::EN : ConstantKind::ENNt, n,
                                             R(0), pol);
            const R scale = std::max(app.scale, R(abs(E)));
            double res = relative<R>(app.value - E, scale);
            if (which != 5) res = std::max(res, to_double<R>(groundstate_closure(cs, cp, x, xt, pol)));
            return {res, to_double<R>(scale)};
        }
        case 2:
        case 3: {
            const auto F = which == 2 ? cauchy_interaction(cs, cp, n.N, n.M, pol)
                                      : dual_cauchy_interaction(cs, n.N, n.Mt, pol);
            const cvec<R>& other = which == 2 ? y : yt;
            const auto lhs = apply_vd<R>(
                cs, x, cp, [&](const cvec<R>& m) { return block_ratio(F, X, 0, x, m, mode); }, pol);
            const CouplingSet<R> cp2 = which == 2 ? kernel_partner(cp) : dual_partner(cp);
            const auto rhs = apply_vd<R>(
                cs, other, cp2, [&](const cvec<R>& m) { return block_ratio(F, X, x.size(), other, m, mode); },
                pol);
            const cplx<R> C = eigen_constant(cs, cp, which == 2 ? ConstantKind::CNM : ConstantKind::CtNMt, n,
                                             R(0), pol);
            const cplx<R> diff = which == 2 ? lhs.value - rhs.value - C : lhs.value + rhs.value - C;
            const R scale = std::max({lhs.scale, rhs.scale, R(abs(C))});
            return {relative<R>(diff, scale), to_double<R>(scale)};
        }
        case 6: {
            const auto F = deformed_interaction(cs, cp, n, pol);
            const std::size_t oy = x.size() + xt.size();
            const auto lhs = apply_deformed<R>(
                cs, x, xt, cp,
                [&](const cvec<R>& a, const cvec<R>& b) {
                    const cplx<R> r = block_ratio(F, X, 0, x, a, mode);
                    return r * block_ratio(F, X, x.size(), xt, b, mode);
                },
                pol);
            const auto rhs = apply_deformed<R>(
                cs, y, yt, kernel_partner(cp),
                [&](const cvec<R>& a, const cvec<R>& b) {
                    const cplx<R> r = block_ratio(F, X, oy, y, a, mode);
                    return r * block_ratio(F, X, oy + y.size(), yt, b, mode);
                },
                pol);
            const cplx<R> C = eigen_constant(cs, cp, ConstantKind::CNNtMMt, n, R(0), pol);
            const R scale = std::max({lhs.scale, rhs.scale, R(abs(C))});
            return {relative<R>(lhs.value - rhs.value - C, scale), to_double<R>(scale)};
        }
    }
    throw ConfigError("corollary must be 1..6");
}

template <class R>
Residual residual_quasi_invariance(const CaseParams<R>& cs, const CouplingSet<R>& cp, int n,
                                   PowerSumWeight weight, const cplx<R>& h) {
    const R w = power_sum_weight(cs, cp, n, weight);
    const cplx<R> sx(R(0), cp.beta / R(2));
    const cplx<R> sy(R(0), cp.lambda * cp.beta / R(2));
    const cplx<R> up = deformed_power_sum(cs, cvec<R>{h + sx}, cvec<R>{h + sy}, w, n);
    const cplx<R> down = deformed_power_sum(cs, cvec<R>{h - sx}, cvec<R>{h - sy}, w, n);
    const R scale = std::max(abs(up), abs(down));
    return {relative<R>(up - down, scale), to_double<R>(scale)};
}

template <class R>
Residual residual_quasi_pole(const CaseParams<R>& cs, const CouplingSet<R>& cp, int n,
                             PowerSumWeight weight, const cplx<R>& xt, const R& eta,
                             const TruncationPolicy& pol) {
    const R w = power_sum_weight(cs, cp, n, weight);
    const BlockFunction<R> p = [&](const cvec<R>& a, const cvec<R>& b) {
        return deformed_power_sum(cs, a, b, w, n);
    };
    const cplx<R> pole = xt + cplx<R>(R(0), (cp.lambda + R(1)) * cp.beta / R(2));
    const auto plus = apply_deformed<R>(cs, cvec<R>{pole + eta}, cvec<R>{xt}, cp, p, pol);
    const auto minus = apply_deformed<R>(cs, cvec<R>{pole - eta}, cvec<R>{xt}, cp, p, pol);
    const R scale = std::max(plus.scale, minus.scale);
    return {relative<R>(plus.value - minus.value, scale), to_double<R>(scale)};
}

template <class R>
Residual residual_antisymmetry(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                               const cvec<R>& xt, const BlockFunction<R>& fn, bool literal,
                               const TruncationPolicy& pol) {
    CouplingSet<R> flipped = cp;
    flipped.beta = -cp.beta;
    if (literal)
        for (auto& g : flipped.g) g = -g;
    const auto a = apply_deformed<R>(cs, x, xt, cp, fn, pol);
    const auto b = apply_deformed<R>(cs, x, xt, flipped, fn, pol);
    const R scale = std::max(a.scale, b.scale);
    return {relative<R>(a.value + b.value, scale), to_double<R>(scale)};
}

template <class R>
Residual residual_swap(const CaseParams<R>& cs, const CouplingSet<R>& cp, const cvec<R>& x,
                       const cvec<R>& xt, const BlockFunction<R>& fn, bool literal,
                       const TruncationPolicy& pol) {
    CouplingSet<R> sw = cp;
    for (auto& g : sw.g) {
        const R t = (R(2) * g - cp.lambda - R(1)) / (R(2) * cp.lambda);
        g = literal ? t : -t;
    }
    sw.lambda = R(1) / cp.lambda;
    sw.beta = -cp.lambda * cp.beta;
    const BlockFunction<R> swapped = [&](const cvec<R>& a, const cvec<R>& b) { return fn(b, a); };
    const auto a = apply_deformed<R>(cs, x, xt, cp, fn, pol);
    const auto b = apply_deformed<R>(cs, xt, x, sw, swapped, pol);
    const R scale = std::max(a.scale, b.scale);
    return {relative<R>(a.value - b.value, scale), to_double<R>(scale)};
}

template <class R>
Residual residual_gamma_fe(const CaseParams<R>& cs, const cplx<R>& alpha, const cplx<R>& x,
                           const TruncationPolicy& pol) {
    GammaSpec<R> spec{cs, alpha, pol, false};
    const cplx<R> rhs = functional_eq_constant(cs, alpha, pol) * s_eval(cs, x, pol);
    const R scale = abs(rhs);
    return {relative<R>(functional_residual(spec, x), scale), to_double<R>(scale)};
}

template <class R>
Residual residual_reflection(const CaseParams<R>& cs, const cplx<R>& alpha, const cplx<R>& x,
                             const TruncationPolicy& pol) {
    GammaSpec<R> neg{cs, -alpha, pol, false};
    GammaSpec<R> pos{cs, alpha, pol, false};
    const cplx<R> a = gamma_G(neg, x);
    const cplx<R> b = gamma_G(pos, cplx<R>(-x));
    const R scale = abs(b);
    return {relative<R>(a - b, scale), to_double<R>(scale)};
}

template <class R>
Residual residual_oddness(const CaseParams<R>& cs, const cplx<R>& x, const TruncationPolicy& pol) {
    const cplx<R> a = s_eval(cs, x, pol);
    const cplx<R> b = s_eval(cs, cplx<R>(-x), pol);
    const R scale = abs(a);
    return {relative<R>(a + b, scale), to_double<R>(scale)};
}

template <class R>
Residual residual_quasi_period(const CaseParams<R>& cs, const cplx<R>& x, const TruncationPolicy& pol) {
    Residual worst;
    for (int nu = 0; nu <= cs.rho; ++nu) {
        const cplx<R> lhs = s_eval(cs, cplx<R>(x + cs.omega[nu]), pol);
        const cplx<R> rhs = quasi_factor(cs, nu, x) * s_eval(cs, x, pol);
        const R scale = std::max(abs(lhs), abs(rhs));
        const double r = relative<R>(lhs - rhs, scale);
        if (r >= worst.residual) worst = {r, to_double<R>(scale)};
    }
    return worst;
}

template <class R>
Residual residual_duplication(const CaseParams<R>& cs, const cplx<R>& x, const TruncationPolicy& pol) {
    const R scale = abs(s_eval(cs, cplx<R>(x * R(2)), pol));
    return {relative<R>(duplication_residual(cs, x, pol), scale), to_double<R>(scale)};
}

template <class R>
Residual residual_theta_product(const cplx<R>& z, const cplx<R>& tau, const TruncationPolicy& pol) {
    const cplx<R> a = theta_eval<R>(z, tau, pol);
    const cplx<R> b = theta_product<R>(z, tau, pol);
    const R scale = abs(a);
    return {relative<R>(a - b, scale), to_double<R>(scale)};
}

#define KVD_INSTANTIATE(R)                                                                          \
    template Residual residual_key_lemma<R>(const CaseParams<R>&, const KeyLemmaParams<R>&,         \
                                            const cvec<R>&, const cvec<R>&,                         \
                                            const TruncationPolicy&);                               \
    template Residual residual_source<R>(const Configuration<R>&);                                  \
    template Residual residual_lemma1<R>(const Configuration<R>&, const TestFunction<R>&,           \
                                         const cvec<R>&, bool);                                     \
    template TestFunction<R> exponential_test_function<R>(int, std::size_t, std::uint64_t);         \
    template Residual residual_corollary<R>(const CaseParams<R>&, const CouplingSet<R>&, int,       \
                                            const ParticleCounts&, const cvec<R>&, RatioMode,       \
                                            const TruncationPolicy&);                               \
    template Residual residual_quasi_invariance<R>(const CaseParams<R>&, const CouplingSet<R>&,     \
                                                   int, PowerSumWeight, const cplx<R>&);            \
    template Residual residual_quasi_pole<R>(const CaseParams<R>&, const CouplingSet<R>&, int,      \
                                             PowerSumWeight, const cplx<R>&, const R&,              \
                                             const TruncationPolicy&);                              \
    template Residual residual_antisymmetry<R>(const CaseParams<R>&, const CouplingSet<R>&,         \
                                               const cvec<R>&, const cvec<R>&,                      \
                                               const BlockFunction<R>&, bool,                       \
                                               const TruncationPolicy&);                            \
    template Residual residual_swap<R>(const CaseParams<R>&, const CouplingSet<R>&, const cvec<R>&, \
                                       const cvec<R>&, const BlockFunction<R>&, bool,               \
                                       const TruncationPolicy&);                                    \
    template Residual residual_gamma_fe<R>(const CaseParams<R>&, const cplx<R>&, const cplx<R>&,    \
                                           const TruncationPolicy&);                                \
    template Residual residual_reflection<R>(const CaseParams<R>&, const cplx<R>&, const cplx<R>&,  \
                                             const TruncationPolicy&);                              \
    template Residual residual_oddness<R>(const CaseParams<R>&, const cplx<R>&,                     \
                                          const TruncationPolicy&);                                 \
    template Residual residual_quasi_period<R>(const CaseParams<R>&, const cplx<R>&,                \
                                               const TruncationPolicy&);                            \
    template Residual residual_duplication<R>(const CaseParams<R>&, const cplx<R>&,                 \
                                              const TruncationPolicy&);                             \
    template Residual residual_theta_product<R>(const cplx<R>&, const cplx<R>&,                     \
                                                const TruncationPolicy&);

KVD_INSTANTIATE(double)
KVD_INSTANTIATE(ext_real)

// ---- runner --------------------------------------------------------------

std::vector<ResidualReport> summarize(const std::vector<ResidualRecord>& records) {
    std::vector<ResidualReport> out;
    std::map<std::tuple<int, int, std::string, bool>, std::size_t> slot;
    for (const auto& r : records) {
        const auto key = std::make_tuple(int(r.identity), int(r.kind), r.variant, r.control);
        auto it = slot.find(key);
        if (it == slot.end()) {
            ResidualReport rep;
            rep.identity = r.identity;
            rep.kind = r.kind;
            rep.variant = r.variant;
            rep.control = r.control;
            rep.tolerance = r.tolerance;
            rep.seed = r.seed;
            rep.min_rel_residual = r.residual;
            rep.max_rel_residual = r.residual;
            rep.normalization_scale = r.scale;
            it = slot.emplace(key, out.size()).first;
            out.push_back(rep);
        }
        auto& rep = out[it->second];
        ++rep.sample_count;
        rep.pass = rep.pass && r.pass;
        // A control's worst point is its smallest residual.
        const bool worse = r.control ? r.residual < rep.min_rel_residual : r.residual > rep.max_rel_residual;
        if (worse || !std::isfinite(r.residual)) rep.normalization_scale = r.scale;
        if (!(r.residual <= rep.max_rel_residual)) rep.max_rel_residual = r.residual;
        if (!(r.residual >= rep.min_rel_residual)) rep.min_rel_residual = r.residual;
    }
    return out;
}

int default_samples(IdentityId id) {
    switch (id) {
        case IdentityId::GammaFE:
        case IdentityId::KeyLemma: return 50;
        case IdentityId::Lemma1: return 20;
        case IdentityId::QuasiInvariance: return 10;
        case IdentityId::AntiSymmetry:
        case IdentityId::Swap: return 5;
        case IdentityId::Oddness:
        case IdentityId::QuasiPeriod:
        case IdentityId::Duplication: return 63;
        case IdentityId::ThetaProduct: return 252;
        default: return 20;
    }
}

double default_tolerance(IdentityId id, CaseKind kind) {
    switch (id) {
        case IdentityId::Reflection: return 1e-14;
        case IdentityId::Lemma1:
        case IdentityId::QuasiInvariance: return 1e-8;
        case IdentityId::AntiSymmetry:
        case IdentityId::Swap:
        case IdentityId::Oddness:
        case IdentityId::QuasiPeriod:
        case IdentityId::Duplication:
        case IdentityId::ThetaProduct: return 1e-10;
        default: return kind == CaseKind::IV ? 1e-8 : 1e-9;
    }
}

CaseParams<double> default_case(CaseKind kind, const VerifySettings& settings) {
    const double r = settings.r.value_or(1.0);
    const double a = settings.a.value_or(kind == CaseKind::IV ? 1.4 : 1.3);
    return CaseParams<double>::make(kind, r, a, settings.policy.max_nome);
}

namespace {

// Residual above which a literal-form structural check counts as failed.
constexpr double kLiteralFloor = 1e-6;
// Offset from the balanced value of the free coupling in negative controls.
constexpr double kUnbalance = 0.1;
constexpr int kMaxAttempts = 25;
constexpr int kControlPoints = 5;
constexpr int kDirectPoints = 3;

template <class R>
CaseParams<R> lift(const CaseParams<double>& cs) {
    if constexpr (std::is_same_v<R, double>) return cs;
    else return cs.template convert<R>();
}

template <class R>
CouplingSet<R> lift(const CouplingSet<double>& cp) {
    if constexpr (std::is_same_v<R, double>) return cp;
    else return cp.template convert<R>();
}

template <class R>
cvec<R> lift(const std::vector<std::complex<double>>& X) {
    cvec<R> out;
    for (const auto& z : X) out.push_back(from_cdouble<R>(z));
    return out;
}

template <class F>
Residual at_precision(bool extended, F&& f) {
    if (extended) return f(ext_real(0));
    return f(0.0);
}

std::string mass_list(const std::vector<MassTag>& m) {
    if (m.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < m.size(); ++i) out += (i ? "," : "") + std::string(to_string(m[i]));
    return out;
}

std::string counts_text(const ParticleCounts& n) {
    return std::to_string(n.N) + "," + std::to_string(n.Nt) + "," + std::to_string(n.M) + "," +
           std::to_string(n.Mt);
}

// One point of a variant: samples its inputs from rng, fills point/params, returns the residual.
using PointEval = std::function<Residual(Sampler&, ResidualRecord&)>;

struct Task {
    IdentityId id = IdentityId::GammaFE;
    CaseKind kind = CaseKind::I;
    std::string variant;
    bool control = false;
    double tolerance = 0;
    std::string flag;
    int points = 0;
    PointEval eval;
};

struct TaskResult {
    std::vector<ResidualRecord> records;
    SampleStats stats;
};

// Sampler statistics of the task running on this thread.
thread_local SampleStats* current_stats = nullptr;

TaskResult run_task(const Task& t, std::uint64_t seed, std::size_t ordinal) {
    TaskResult out;
    current_stats = &out.stats;
    Sampler rng(mix_seed(seed, std::string(to_string(t.id)) + "/" + std::string(to_string(t.kind)) + "/" +
                                   t.variant,
                         ordinal));
    for (int i = 0; i < t.points; ++i) {
        ResidualRecord rec;
        rec.identity = t.id;
        rec.kind = t.kind;
        rec.variant = t.variant;
        rec.control = t.control;
        rec.seed = seed;
        rec.index = i;
        rec.tolerance = t.tolerance;
        rec.flag = t.flag;
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
            rec.point.clear();
            rec.params.clear();
            try {
                const Residual r = t.eval(rng, rec);
                rec.residual = r.residual;
                rec.scale = r.scale;
                rec.error.clear();
                break;
            } catch (const DomainError& e) {
                rec.error = e.what();
                rec.residual = std::numeric_limits<double>::quiet_NaN();
                rec.scale = 0;
                ++out.stats.rejected;
            }
        }
        rec.pass = rec.error.empty() &&
                   (t.control ? rec.residual > t.tolerance : rec.residual < t.tolerance);
        out.records.push_back(std::move(rec));
    }
    current_stats = nullptr;
    return out;
}

// Case-level context shared by the task builders.
struct CaseSetup {
    const VerifySettings& settings;
    CaseKind kind;
    CaseParams<double> cs;
    double lambda = 1.7;
    double beta = 0.31;
    double re_half = 1.0;
    double im_half = 0.2;
    double separation = 0.05;

    CaseSetup(const VerifySettings& s, CaseKind k) : settings(s), kind(k), cs(default_case(k, s)) {
        if (k == CaseKind::IV) {
            lambda = 1.3;
            beta = 0.5;
            re_half = 0.6;
            im_half = 0.15;
        }
        lambda = s.lambda.value_or(lambda);
        beta = s.beta.value_or(beta);
        CouplingSet<double> probe = couplings_fixed();
        if (s.g && s.g->size() != std::size_t(2 * cs.rho + 2))
            throw ConfigError("g: case " + std::string(to_string(k)) + " needs " +
                              std::to_string(2 * cs.rho + 2) + " couplings, got " +
                              std::to_string(s.g->size()));
        if (s.g) probe.g = *s.g;
        else probe.g.assign(std::size_t(2 * cs.rho + 2), 0.1);
        probe.validate(cs);
    }

    CouplingSet<double> couplings_fixed() const {
        CouplingSet<double> cp;
        cp.lambda = lambda;
        cp.beta = beta;
        return cp;
    }

    CouplingSet<double> couplings(Sampler& rng) const {
        CouplingSet<double> cp = couplings_fixed();
        if (settings.g) cp.g = *settings.g;
        else
            for (int i = 0; i < 2 * cs.rho + 2; ++i) cp.g.push_back(rng.uniform(-0.4, 0.4));
        return cp;
    }

    std::vector<std::complex<double>> point(Sampler& rng, std::size_t count) const {
        return admissible_point(cs, count, rng, re_half, im_half, separation, current_stats);
    }

    int samples(IdentityId id) const { return settings.samples > 0 ? settings.samples : default_samples(id); }
    int control_points(IdentityId id) const { return std::min(samples(id), kControlPoints); }
    double tol(IdentityId id) const { return settings.tol.value_or(default_tolerance(id, kind)); }
    bool elliptic() const { return kind == CaseKind::IV; }
    bool balanced_runs() const { return !(elliptic() && settings.no_balance); }
};

void coupling_params(const CouplingSet<double>& cp, ResidualRecord& rec) {
    rec.params.push_back(cp.lambda);
    rec.params.push_back(cp.beta);
    rec.params.insert(rec.params.end(), cp.g.begin(), cp.g.end());
}

std::vector<std::vector<MassTag>> mass_vectors(const CaseSetup& c) {
    if (c.settings.masses) return {*c.settings.masses};
    std::vector<std::vector<MassTag>> out{{}};
    const int top = std::min(c.settings.max_n, 3);
    for (int n = 1; n <= std::min(top, 2); ++n) {
        const int total = n == 1 ? 4 : 16;
        for (int k = 0; k < total; ++k) {
            std::vector<MassTag> m;
            for (int J = n - 1, q = k; J >= 0; --J, q /= 4) m.insert(m.begin(), MassTag(q % 4));
            out.push_back(m);
        }
    }
    if (top >= 3) {
        // 16 distinct vectors out of the 64.
        Sampler rng(mix_seed(c.settings.seed, "mass-vectors", std::uint64_t(c.kind)));
        std::vector<int> codes(64);
        for (int k = 0; k < 64; ++k) codes[std::size_t(k)] = k;
        for (int k = 0; k < 16; ++k) {
            std::swap(codes[std::size_t(k)], codes[std::size_t(k + rng.below(64 - k))]);
            const int q = codes[std::size_t(k)];
            out.push_back({MassTag(q / 16), MassTag(q / 4 % 4), MassTag(q % 4)});
        }
    }
    return out;
}

// ---- task builders -------------------------------------------------------

void add_gamma_tasks(const CaseSetup& c, std::vector<Task>& tasks) {
    const auto& s = c.settings;
    for (int sign : {1, -1}) {
        Task t{IdentityId::GammaFE, c.kind, sign > 0 ? "alpha=+beta" : "alpha=-beta", false,
               c.tol(IdentityId::GammaFE), "", c.samples(IdentityId::GammaFE), {}};
        t.eval = [&c, &s, sign](Sampler& rng, ResidualRecord& rec) {
            const std::complex<double> alpha(sign * c.beta, 0);
            std::complex<double> x;
            if (c.kind == CaseKind::III) {
                // Inside the strip of the integral representation at both shifted arguments.
                const double a = c.cs.a;
                x = {rng.uniform(-c.re_half, c.re_half), rng.uniform(0.15 * a, 0.85 * a)};
                if (sign < 0) x = -x;
            } else {
                x = c.point(rng, 1)[0];
            }
            rec.point = {x};
            rec.params = {alpha.real(), alpha.imag()};
            return at_precision(s.extended, [&](auto zero) {
                using R = decltype(zero);
                return residual_gamma_fe<R>(lift<R>(c.cs), from_cdouble<R>(alpha), from_cdouble<R>(x), s.policy);
            });
        };
        tasks.push_back(std::move(t));
    }
}

void add_reflection_tasks(const CaseSetup& c, std::vector<Task>& tasks) {
    const auto& s = c.settings;
    Task t{IdentityId::Reflection, c.kind, "alpha=+beta", false, c.tol(IdentityId::Reflection), "",
           c.samples(IdentityId::Reflection), {}};
    t.eval = [&c, &s](Sampler& rng, ResidualRecord& rec) {
        const std::complex<double> alpha(c.beta, 0);
        std::complex<double> x = c.point(rng, 1)[0];
        if (c.kind == CaseKind::III) x = {x.real(), -rng.uniform(0.15 * c.cs.a, 0.85 * c.cs.a)};
        rec.point = {x};
        rec.params = {alpha.real(), alpha.imag()};
        return at_precision(s.extended, [&](auto zero) {
            using R = decltype(zero);
            return residual_reflection<R>(lift<R>(c.cs), from_cdouble<R>(alpha), from_cdouble<R>(x), s.policy);
        });
    };
    tasks.push_back(std::move(t));
}

void add_key_lemma_tasks(const CaseSetup& c, std::vector<Task>& tasks) {
    const auto& s = c.settings;
    for (int n = 0; n <= std::min(s.max_n, 3); ++n) {
        for (bool control : {false, true}) {
            if (control && !c.elliptic()) continue;
            if (!control && !c.balanced_runs()) continue;
            Task t{IdentityId::KeyLemma, c.kind,
                   "N=" + std::to_string(n) + (control ? " unbalanced" : c.elliptic() ? " balanced" : ""),
                   control, control ? kControlFloor : c.tol(IdentityId::KeyLemma), control ? "unbalanced" : "",
                   control ? c.control_points(IdentityId::KeyLemma) : c.samples(IdentityId::KeyLemma), {}};
            t.eval = [&c, &s, n, control](Sampler& rng, ResidualRecord& rec) {
                const int r1 = c.cs.rho + 1;
                KeyLemmaParams<double> klp;
                klp.gamma = {rng.uniform(-0.2, 0.2), rng.uniform(0.2, 0.6)};
                for (int J = 0; J < n; ++J) klp.a.push_back(rng.box(0.5, 0.2));
                for (int v = 0; v < r1; ++v) klp.c.push_back(rng.box(0.5, 0.2));
                for (int v = 0; v < r1; ++v) klp.d.push_back(rng.box(0.5, 0.2));
                for (int v = 0; v < 2 * r1; ++v) klp.n.push_back(rng.box(0.3, 0.1));
                cvec<double> m;
                for (int J = 0; J < n; ++J) m.push_back(rng.box(1.0, 0.3));
                if (c.elliptic()) {
                    klp.n.back() -= klp.balance_defect(m);
                    if (control) klp.n.back() += kUnbalance;
                }
                klp.validate(c.cs, std::size_t(n), s.policy);
                const auto X = c.point(rng, std::size_t(n));
                rec.point = X;
                rec.point.insert(rec.point.end(), m.begin(), m.end());
                rec.params = {klp.gamma.real(), klp.gamma.imag()};
                return at_precision(s.extended, [&](auto zero) {
                    using R = decltype(zero);
                    KeyLemmaParams<R> kp;
                    kp.gamma = from_cdouble<R>(klp.gamma);
                    kp.a = lift<R>(klp.a);
                    kp.c = lift<R>(klp.c);
                    kp.d = lift<R>(klp.d);
                    kp.n = lift<R>(klp.n);
                    return residual_key_lemma<R>(lift<R>(c.cs), kp, lift<R>(X), lift<R>(m), s.policy);
                });
            };
            tasks.push_back(std::move(t));
        }
    }
}

void add_source_tasks(const CaseSetup& c, std::vector<Task>& tasks) {
    const auto& s = c.settings;
    for (const auto& masses : mass_vectors(c)) {
        for (bool control : {false, true}) {
            if (control && !c.elliptic()) continue;
            if (!control && !c.balanced_runs()) continue;
            const std::string base = "m=" + mass_list(masses);
            Task t{IdentityId::SourceThm, c.kind,
                   base + (control ? " unbalanced" : c.elliptic() ? " balanced" : ""), control,
                   control ? kControlFloor : c.tol(IdentityId::SourceThm), control ? "unbalanced" : "",
                   control ? c.control_points(IdentityId::SourceThm) : c.samples(IdentityId::SourceThm), {}};
            t.eval = [&c, &s, masses, control](Sampler& rng, ResidualRecord& rec) {
                Configuration<double> cf;
                cf.cs = c.cs;
                cf.couplings = c.couplings(rng);
                cf.masses = masses;
                cf.policy = s.policy;
                cf.X = c.point(rng, masses.size());
                if (c.elliptic()) {
                    cf.couplings.g[7] = balance_solve(cf.couplings, cf.masses, 7);
                    if (control) cf.couplings.g[7] += kUnbalance;
                }
                rec.point = cf.X;
                coupling_params(cf.couplings, rec);
                return at_precision(s.extended, [&](auto zero) {
                    using R = decltype(zero);
                    Configuration<R> cr;
                    cr.cs = lift<R>(cf.cs);
                    cr.couplings = lift<R>(cf.couplings);
                    cr.masses = cf.masses;
                    cr.policy = cf.policy;
                    cr.X = lift<R>(cf.X);
                    return residual_source<R>(cr);
                });
            };
            tasks.push_back(std::move(t));
        }
    }
}

constexpr int kTestFunctions = 5;
constexpr std::uint64_t kTestFunctionSeed = 77;

void add_lemma1_tasks(const CaseSetup& c, std::vector<Task>& tasks) {
    if (c.kind != CaseKind::I && c.kind != CaseKind::II) return;
    const auto& s = c.settings;
    for (const auto& masses : mass_vectors(c)) {
        if (masses.empty() || masses.size() > 2) continue;
        for (bool fault : {false, true}) {
            Task t{IdentityId::Lemma1, c.kind, "m=" + mass_list(masses) + (fault ? " fault" : ""), fault,
                   fault ? kControlFloor : c.tol(IdentityId::Lemma1), fault ? "fault-injection" : "",
                   fault ? 2 : c.samples(IdentityId::Lemma1), {}};
            t.eval = [&c, &s, masses, fault](Sampler& rng, ResidualRecord& rec) {
                const int fn_id = fault ? 1 + rec.index % (kTestFunctions - 1) : rec.index % kTestFunctions;
                Configuration<double> cf;
                cf.cs = c.cs;
                cf.couplings = c.couplings(rng);
                cf.masses = masses;
                cf.policy = s.policy;
                // Near a real reference point where every root factor is evaluated away from its zeros.
                std::vector<std::complex<double>> X0;
                for (std::size_t J = 0; J < masses.size(); ++J) X0.emplace_back(0.4 + 0.5 * double(J), 0.0);
                cf.X = X0;
                for (auto& x : cf.X) x += rng.box(0.1, 0.05);
                rec.point = cf.X;
                coupling_params(cf.couplings, rec);
                rec.params.push_back(fn_id);
                return at_precision(s.extended, [&](auto zero) {
                    using R = decltype(zero);
                    Configuration<R> cr;
                    cr.cs = lift<R>(cf.cs);
                    cr.couplings = lift<R>(cf.couplings);
                    cr.masses = cf.masses;
                    cr.policy = cf.policy;
                    cr.X = lift<R>(cf.X);
                    const auto fn = exponential_test_function<R>(fn_id, masses.size(), kTestFunctionSeed);
                    return residual_lemma1<R>(cr, fn, lift<R>(X0), fault);
                });
            };
            tasks.push_back(std::move(t));
        }
    }
}

bool corollary_uses(int which, const ParticleCounts& n) {
    if ((which == 1 || which == 2 || which == 3) && n.Nt) return false;
    if ((which == 1 || which == 3 || which == 4 || which == 5) && n.M) return false;
    if ((which == 1 || which == 2 || which == 4 || which == 5) && n.Mt) return false;
    return true;
}

std::vector<ParticleCounts> corollary_counts(const CaseSetup& c, int which) {
    if (c.settings.particles) {
        if (!corollary_uses(which, *c.settings.particles)) return {};
        return {*c.settings.particles};
    }
    std::vector<ParticleCounts> out;
    const int top = c.settings.max_n;
    for (int N = 0; N <= top; ++N)
        for (int Nt = 0; N + Nt <= top; ++Nt)
            for (int M = 0; N + Nt + M <= top; ++M)
                for (int Mt = 0; N + Nt + M + Mt <= top; ++Mt) {
                    const ParticleCounts n{N, Nt, M, Mt};
                    if (corollary_uses(which, n)) out.push_back(n);
                }
    return out;
}

void add_corollary_tasks(const CaseSetup& c, int which, std::vector<Task>& tasks) {
    const auto& s = c.settings;
    const IdentityId id = IdentityId(int(IdentityId::Cor1) + which - 1);
    const bool has_direct = which == 2 || which == 3 || which == 6;
    for (const auto& n : corollary_counts(c, which)) {
        enum class Kind { Closure, Direct, Control };
        for (Kind k : {Kind::Closure, Kind::Direct, Kind::Control}) {
            if (k == Kind::Direct && (!has_direct || !c.balanced_runs())) continue;
            if (k == Kind::Control && !c.elliptic()) continue;
            if (k != Kind::Control && !c.balanced_runs()) continue;
            const bool control = k == Kind::Control;
            std::string variant = "n=" + counts_text(n);
            if (k == Kind::Direct) variant += " direct";
            if (control) variant += " unbalanced";
            else if (c.elliptic()) variant += " balanced";
            const int points = control ? c.control_points(id)
                               : k == Kind::Direct ? std::min(c.samples(id), kDirectPoints)
                                                   : c.samples(id);
            Task t{id, c.kind, variant, control, control ? kControlFloor : c.tol(id), control ? "unbalanced" : "",
                   points, {}};
            const RatioMode mode = k == Kind::Direct ? RatioMode::Direct : RatioMode::Closure;
            t.eval = [&c, &s, which, n, control, mode](Sampler& rng, ResidualRecord& rec) {
                CouplingSet<double> cp = c.couplings(rng);
                if (c.elliptic()) {
                    cp.g[7] = balance_solve(corollary_balance(which), cp, n, 7);
                    if (control) cp.g[7] += kUnbalance;
                }
                const auto X = c.point(rng, std::size_t(n.N + n.Nt + n.M + n.Mt));
                rec.point = X;
                coupling_params(cp, rec);
                return at_precision(s.extended, [&](auto zero) {
                    using R = decltype(zero);
                    return residual_corollary<R>(lift<R>(c.cs), lift<R>(cp), which, n, lift<R>(X), mode, s.policy);
                });
            };
            tasks.push_back(std::move(t));
        }
    }
}

// Step off the coefficient pole in the jump check.
constexpr double kPoleStep = 1e-7;

void add_quasi_invariance_tasks(const CaseSetup& c, std::vector<Task>& tasks) {
    if (c.kind != CaseKind::II) return;
    const auto& s = c.settings;
    struct Form {
        const char* name;
        PowerSumWeight weight;
        bool pole;
        bool control;
        const char* flag;
    };
    constexpr Form forms[] = {
        {"corrected", PowerSumWeight::Corrected, false, false, ""},
        {"printed", PowerSumWeight::Printed, false, true, "printed-weight"},
        {"unit", PowerSumWeight::Unit, false, true, "wrong-weight"},
        {"corrected pole", PowerSumWeight::Corrected, true, false, ""},
        {"printed pole", PowerSumWeight::Printed, true, true, "printed-weight"},
    };
    const int id_count = c.samples(IdentityId::QuasiInvariance);
    for (int n = 1; n <= 3; ++n) {
        for (const Form& f : forms) {
            Task t{IdentityId::QuasiInvariance, c.kind, "n=" + std::to_string(n) + " " + f.name, f.control,
                   f.control ? kControlFloor : c.tol(IdentityId::QuasiInvariance), f.flag,
                   f.control ? std::min(id_count, kControlPoints) : id_count, {}};
            t.eval = [&c, &s, n, f](Sampler& rng, ResidualRecord& rec) {
                const CouplingSet<double> cp = c.couplings(rng);
                const std::complex<double> h = rng.box(1.0, 0.1);
                rec.point = {h};
                coupling_params(cp, rec);
                rec.params.push_back(n);
                return at_precision(s.extended, [&](auto zero) {
                    using R = decltype(zero);
                    if (f.pole)
                        return residual_quasi_pole<R>(lift<R>(c.cs), lift<R>(cp), n, f.weight, from_cdouble<R>(h),
                                                      R(kPoleStep), s.policy);
                    return residual_quasi_invariance<R>(lift<R>(c.cs), lift<R>(cp), n, f.weight, from_cdouble<R>(h));
                });
            };
            tasks.push_back(std::move(t));
        }
    }
}

void add_structural_tasks(const CaseSetup& c, IdentityId id, std::vector<Task>& tasks) {
    const auto& s = c.settings;
    std::vector<std::pair<int, int>> blocks{{1, 1}, {2, 1}, {1, 2}};
    if (s.particles && s.particles->N > 0 && s.particles->Nt > 0) blocks = {{s.particles->N, s.particles->Nt}};
    for (auto [N, Nt] : blocks) {
        for (bool literal : {false, true}) {
            const std::string variant =
                "N=" + std::to_string(N) + ",Nt=" + std::to_string(Nt) + (literal ? " literal" : "");
            Task t{id, c.kind, variant, literal, literal ? kLiteralFloor : c.tol(id), literal ? "literal-form" : "",
                   c.samples(id), {}};
            t.eval = [&c, &s, id, N, Nt, literal](Sampler& rng, ResidualRecord& rec) {
                const int fn_id = rec.index % kTestFunctions;
                const CouplingSet<double> cp = c.couplings(rng);
                const auto X = c.point(rng, std::size_t(N + Nt));
                rec.point = X;
                coupling_params(cp, rec);
                rec.params.push_back(fn_id);
                return at_precision(s.extended, [&](auto zero) {
                    using R = decltype(zero);
                    const cvec<R> all = lift<R>(X);
                    const cvec<R> x(all.begin(), all.begin() + N);
                    const cvec<R> xt(all.begin() + N, all.end());
                    const auto tf = exponential_test_function<R>(fn_id, std::size_t(N + Nt), kTestFunctionSeed);
                    const BlockFunction<R> fn = [tf](const cvec<R>& u, const cvec<R>& v) {
                        cvec<R> joined = u;
                        joined.insert(joined.end(), v.begin(), v.end());
                        return tf(joined);
                    };
                    return id == IdentityId::AntiSymmetry
                               ? residual_antisymmetry<R>(lift<R>(c.cs), lift<R>(cp), x, xt, fn, literal, s.policy)
                               : residual_swap<R>(lift<R>(c.cs), lift<R>(cp), x, xt, fn, literal, s.policy);
                });
            };
            tasks.push_back(std::move(t));
        }
    }
}

void add_s_tasks(const CaseSetup& c, IdentityId id, std::vector<Task>& tasks) {
    const auto& s = c.settings;
    if (id == IdentityId::ThetaProduct && c.kind != CaseKind::IV) return;
    Task t{id, c.kind, id == IdentityId::ThetaProduct ? "random tau" : "default", false, c.tol(id), "",
           c.samples(id), {}};
    t.eval = [&c, &s, id](Sampler& rng, ResidualRecord& rec) {
        if (id == IdentityId::ThetaProduct) {
            const std::complex<double> z = rng.box(0.5, 0.3);
            const std::complex<double> tau(rng.uniform(-0.5, 0.5), rng.uniform(0.3, 1.2));
            rec.point = {z, tau};
            return at_precision(s.extended, [&](auto zero) {
                using R = decltype(zero);
                return residual_theta_product<R>(from_cdouble<R>(z), from_cdouble<R>(tau), s.policy);
            });
        }
        const std::complex<double> x = c.point(rng, 1)[0];
        rec.point = {x};
        return at_precision(s.extended, [&](auto zero) {
            using R = decltype(zero);
            const CaseParams<R> cs = lift<R>(c.cs);
            const cplx<R> xr = from_cdouble<R>(x);
            if (id == IdentityId::Oddness) return residual_oddness<R>(cs, xr, s.policy);
            if (id == IdentityId::QuasiPeriod) return residual_quasi_period<R>(cs, xr, s.policy);
            return residual_duplication<R>(cs, xr, s.policy);
        });
    };
    tasks.push_back(std::move(t));
}

void add_tasks(const CaseSetup& c, IdentityId id, std::vector<Task>& tasks) {
    switch (id) {
        case IdentityId::GammaFE: return add_gamma_tasks(c, tasks);
        case IdentityId::Reflection: return add_reflection_tasks(c, tasks);
        case IdentityId::KeyLemma: return add_key_lemma_tasks(c, tasks);
        case IdentityId::SourceThm: return add_source_tasks(c, tasks);
        case IdentityId::Lemma1: return add_lemma1_tasks(c, tasks);
        case IdentityId::Cor1:
        case IdentityId::Cor2:
        case IdentityId::Cor3:
        case IdentityId::Cor4:
        case IdentityId::Cor5:
        case IdentityId::Cor6: return add_corollary_tasks(c, int(id) - int(IdentityId::Cor1) + 1, tasks);
        case IdentityId::QuasiInvariance: return add_quasi_invariance_tasks(c, tasks);
        case IdentityId::AntiSymmetry:
        case IdentityId::Swap: return add_structural_tasks(c, id, tasks);
        case IdentityId::Oddness:
        case IdentityId::QuasiPeriod:
        case IdentityId::Duplication:
        case IdentityId::ThetaProduct: return add_s_tasks(c, id, tasks);
    }
}

}  // namespace

std::vector<ResidualRecord> run_verification(const VerifySettings& settings, SampleStats* stats) {
    if (settings.jobs < 1) throw ConfigError("jobs must be at least 1");
    if (settings.max_n < 0 || settings.max_n > 3) throw ConfigError("max-n must be in 0..3");
    if (settings.samples < 0) throw ConfigError("samples must be at least 1");
    if (settings.tol && !(*settings.tol > 0)) throw ConfigError("tol must be positive");
    if (settings.particles) {
        const auto& p = *settings.particles;
        if (p.N < 0 || p.Nt < 0 || p.M < 0 || p.Mt < 0) throw ConfigError("particles must be non-negative");
    }
    if (settings.masses && settings.masses->size() > 3) throw ConfigError("masses: at most 3 entries");
    settings.policy.validate(settings.extended ? scalar_traits<ext_real>::digits10 : scalar_traits<double>::digits10);

    std::vector<IdentityId> ids = settings.identities.empty() ? all_identities() : settings.identities;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<CaseKind> cases = settings.cases;
    std::sort(cases.begin(), cases.end());
    cases.erase(std::unique(cases.begin(), cases.end()), cases.end());

    // Setups are referenced by the task closures; a deque-like stable container is needed.
    std::vector<std::unique_ptr<CaseSetup>> setups;
    for (CaseKind k : cases) setups.push_back(std::make_unique<CaseSetup>(settings, k));

    std::vector<Task> tasks;
    for (IdentityId id : ids)
        for (const auto& c : setups) add_tasks(*c, id, tasks);

    std::vector<TaskResult> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                results[i] = run_task(tasks[i], settings.seed, i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = tasks.size();
            }
        }
    };
    const int jobs = std::min<int>(settings.jobs, std::max<int>(1, int(tasks.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<ResidualRecord> out;
    SampleStats total;
    for (auto& r : results) {
        total.accepted += r.stats.accepted;
        total.rejected += r.stats.rejected;
        for (auto& rec : r.records) out.push_back(std::move(rec));
    }
    if (stats) *stats = total;
    return out;
}

}  // namespace kvd
