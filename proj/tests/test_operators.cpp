#include <doctest.h>

#include <algorithm>

#include "kvd/errors.hpp"
#include "kvd/vandiejen.hpp"
#include "kvd/verify.hpp"
#include "oracle.hpp"

using namespace kvd;
using kvd::test::C;

namespace {

Configuration<double> make_config(CaseKind kind, std::vector<MassTag> masses, std::vector<C> X) {
    Configuration<double> cf;
    cf.cs = default_case(kind, VerifySettings{});
    cf.couplings.lambda = kind == CaseKind::IV ? 1.3 : 1.7;
    cf.couplings.beta = kind == CaseKind::IV ? 0.5 : 0.31;
    const double g[] = {0.13, -0.27, 0.05, 0.31, -0.12, 0.22, -0.36, 0.08};
    cf.couplings.g.assign(g, g + 2 * cf.cs.rho + 2);
    cf.masses = std::move(masses);
    cf.X = std::move(X);
    return cf;
}

const TestFunction<double> one = [](const cvec<double>&) { return C(1); };

}  // namespace

TEST_CASE("mass tags") {
    CHECK(mass_value(MassTag::P1, 1.7) == 1.0);
    CHECK(mass_value(MassTag::M_INV_L, 2.0) == -0.5);
    const auto m = parse_masses("P1,M_INV_L");
    REQUIRE(m.size() == 2);
    CHECK(m[1] == MassTag::M_INV_L);
    CHECK(relate(MassTag::P1, MassTag::M1) == MassRelation::Negated);
    CHECK(relate(MassTag::P1, MassTag::P_INV_L) == MassRelation::Dual);
    CHECK_THROWS_WITH_AS(parse_mass("P2"), doctest::Contains("P2"), ConfigError);
}

TEST_CASE("coupling validation names the field") {
    auto cf = make_config(CaseKind::II, {}, {});
    cf.couplings.g.pop_back();
    CHECK_THROWS_WITH_AS(cf.couplings.validate(cf.cs), doctest::Contains("couplings.g"), ConfigError);
    cf = make_config(CaseKind::II, {}, {});
    cf.couplings.beta = 0;
    CHECK_THROWS_WITH_AS(cf.couplings.validate(cf.cs), doctest::Contains("couplings.beta"), ConfigError);
}

TEST_CASE("source identity in the rational case, two particles") {
    const auto cf = make_config(CaseKind::I, {MassTag::P1, MassTag::M_INV_L}, {C(0.31, 0.05), C(-0.57, 0.12)});
    CHECK(residual_source(cf).residual < 1e-12);
}

TEST_CASE("source identity with no particles is an X-free constant identity") {
    for (CaseKind k : {CaseKind::I, CaseKind::II, CaseKind::III}) {
        const auto cf = make_config(k, {}, {});
        CHECK(residual_source(cf).residual < 1e-12);
    }
}

TEST_CASE("the operator on 1 is invariant under permutations and reflections of the particles") {
    const auto cf = make_config(CaseKind::II, {MassTag::P1, MassTag::M1, MassTag::P_INV_L},
                                {C(0.31, 0.05), C(-0.57, 0.12), C(0.8, -0.07)});
    const C base = apply_conjugated_operator(cf, one).value;
    auto perm = cf;
    std::swap(perm.X[0], perm.X[2]);
    std::swap(perm.masses[0], perm.masses[2]);
    CHECK(std::abs(apply_conjugated_operator(perm, one).value - base) < 1e-12 * std::abs(base));
    auto refl = cf;
    refl.X[1] = -refl.X[1];
    CHECK(std::abs(apply_conjugated_operator(refl, one).value - base) < 1e-12 * std::abs(base));
}

TEST_CASE("elliptic balancing: solved coupling passes, a shifted one fails") {
    auto cf = make_config(CaseKind::IV, {MassTag::P1, MassTag::M_INV_L}, {C(0.21, 0.05), C(-0.37, 0.02)});
    cf.couplings.g[7] = balance_solve(cf.couplings, cf.masses, 7);
    CHECK(cf.balanced());
    CHECK(std::abs(cf.balance_defect()) < 1e-14);
    CHECK(residual_source(cf).residual < 1e-12);
    cf.couplings.g[7] += 0.1;
    CHECK_FALSE(cf.balanced());
    CHECK(residual_source(cf).residual > 1e-3);
}

TEST_CASE("key lemma with free parameters") {
    const auto cs = default_case(CaseKind::II, VerifySettings{});
    KeyLemmaParams<double> klp;
    klp.gamma = C(0.1, 0.4);
    klp.a = {C(0.2, 0.1), C(-0.3, 0.05)};
    klp.c = {C(0.15, -0.1), C(0.4, 0.2)};
    klp.d = {C(-0.25, 0.05), C(0.05, 0.3)};
    klp.d.resize(std::size_t(cs.rho + 1));
    klp.c.resize(std::size_t(cs.rho + 1));
    klp.n = {C(0.1, 0.02), C(-0.2, 0.05), C(0.07, -0.03), C(0.12, 0.01)};
    klp.n.resize(std::size_t(2 * cs.rho + 2));
    const cvec<double> X{C(0.37, 0.05), C(-0.61, 0.1)};
    const cvec<double> m{C(0.8, 0.2), C(-1.1, 0.1)};
    CHECK_NOTHROW(klp.validate(cs, 2, {}));
    CHECK(residual_key_lemma(cs, klp, X, m).residual < 1e-12);
}

TEST_CASE("key lemma parameter checks") {
    const auto cs = default_case(CaseKind::I, VerifySettings{});
    KeyLemmaParams<double> klp;
    klp.gamma = C(0.3, 0);
    klp.a = {C(0.1, 0)};
    klp.c = {C(0.2, 0)};
    klp.d = {C(0.2, 0)};
    klp.n = {C(0.1, 0), C(0.2, 0)};
    CHECK_THROWS_WITH_AS(klp.validate(cs, 1, {}), doctest::Contains("gamma"), ConfigError);
    klp.gamma = C(0.3, 0.2);
    CHECK_THROWS_WITH_AS(klp.validate(cs, 1, {}), doctest::Contains("distinct"), ConfigError);
}

TEST_CASE("denominators at a zero of s are domain errors") {
    const auto cs = default_case(CaseKind::II, VerifySettings{});
    CHECK_THROWS_AS(s_denominator(cs, C(M_PI, 0), {}, "test"), DomainError);
}

TEST_CASE("deformed operator with an empty second block is the van Diejen operator") {
    const auto cf = make_config(CaseKind::III, {}, {});
    const cvec<double> x{C(0.3, 0.04), C(-0.45, 0.1)};
    const TestFunction<double> fn = [](const cvec<double>& v) { return std::exp(C(0, 0.7) * v[0] - 0.2 * v[1]); };
    const BlockFunction<double> block = [&](const cvec<double>& a, const cvec<double>&) { return fn(a); };
    const C a = apply_vd(cf.cs, x, cf.couplings, fn).value;
    const C b = apply_deformed(cf.cs, x, cvec<double>{}, cf.couplings, block).value;
    CHECK(std::abs(a - b) < 1e-13 * std::abs(a));
}

TEST_CASE("coupling transforms") {
    CouplingSet<double> cp;
    cp.lambda = 2.0;
    cp.beta = 0.3;
    cp.g = {0.1, -0.2};
    const auto k = kernel_partner(cp);
    CHECK(k.g[0] == doctest::Approx(1.4));
    const auto d = dual_partner(cp);
    CHECK(d.lambda == doctest::Approx(0.5));
    CHECK(d.beta == doctest::Approx(0.6));
    CHECK(d.g[1] == doctest::Approx(-0.1));
    const auto p = deformed_partner(cp);
    CHECK(p.g[0] == doctest::Approx((3.0 - 0.2) / 4.0));
}

TEST_CASE("deformed power-sum weight carries a leading minus sign") {
    const auto cs = default_case(CaseKind::II, VerifySettings{});
    CouplingSet<double> cp;
    cp.lambda = 1.7;
    cp.beta = 0.31;
    cp.g.assign(4, 0.1);
    const double w = power_sum_weight(cs, cp, 1, PowerSumWeight::Corrected);
    CHECK(w < 0);
    CHECK(power_sum_weight(cs, cp, 1, PowerSumWeight::Printed) == doctest::Approx(-w));
    CHECK(power_sum_weight(cs, cp, 1, PowerSumWeight::Unit) == 1.0);
    const C p = deformed_power_sum(cs, cvec<double>{C(0.2, 0)}, cvec<double>{C(0.5, 0)}, 1.0, 2);
    CHECK(p.real() == doctest::Approx(2 * std::cos(0.8) + 2 * std::cos(2.0)));
}
