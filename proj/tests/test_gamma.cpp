#include <doctest.h>

#include "kvd/errors.hpp"
#include "kvd/gamma.hpp"
#include "oracle.hpp"

using namespace kvd;
using kvd::test::C;
using kvd::test::rel;

namespace {
const auto rational = CaseParams<double>::make(CaseKind::I, 1.0, 1.0);
const auto trig = CaseParams<double>::make(CaseKind::II, 1.0, 1.0);
const auto hyper = CaseParams<double>::make(CaseKind::III, 1.0, 1.3);
const auto ellip = CaseParams<double>::make(CaseKind::IV, 1.0, 1.4);

C G(const CaseParams<double>& cs, C alpha, C x) { return gamma_G(GammaSpec<double>{cs, alpha, {}, false}, x); }
}  // namespace

TEST_CASE("G matches reference values in every case") {
    CHECK(rel(G(rational, 0.31, C(0.3, 0.1)), C(0.4698830342758550578, 0.2603940065443357657)) < 1e-13);
    CHECK(rel(G(trig, 0.31, C(0.2, 0.05)), C(2.585528611293461409, 3.556722482304777691)) < 1e-13);
    CHECK(rel(G(hyper, 0.31, C(0.3, 0.6)), C(0.6192731934174548805, -0.5940347282233460975)) < 1e-12);
    CHECK(rel(G(ellip, 0.5, C(0.2, 0.1)), C(1.930262007106547357, 1.009035599266530214)) < 1e-13);
}

TEST_CASE("functional-equation constants") {
    CHECK(rel(functional_eq_constant(rational, C(0.31, 0)), 1.0 / C(0, 0.31)) < 1e-15);
    CHECK(functional_eq_constant(trig, C(0.31, 0)) == C(0, -2));
    CHECK(rel(functional_eq_constant(hyper, C(0.31, 0)), C(0, -2 * M_PI / 1.3)) < 1e-15);
    CHECK(rel(functional_eq_constant(ellip, C(0.5, 0)), C(0, -1.068955190540092704)) < 1e-14);
    // Negative periods flip the sign.
    CHECK(functional_eq_constant(trig, C(-0.31, 0)) == C(0, 2));
}

TEST_CASE("G satisfies its functional equation for both signs of the period") {
    struct Probe {
        const CaseParams<double>* cs;
        C x;
    };
    for (const Probe& p : {Probe{&rational, C(0.3, 0.1)}, Probe{&trig, C(0.4, 0.05)},
                           Probe{&hyper, C(0.2, 0.6)}, Probe{&ellip, C(0.25, 0.05)}}) {
        for (double sign : {1.0, -1.0}) {
            const C alpha(sign * 0.31, 0);
            const C x = p.cs->kind == CaseKind::III && sign < 0 ? -p.x : p.x;
            GammaSpec<double> spec{*p.cs, alpha, {}, false};
            const C scale = functional_eq_constant(*p.cs, alpha) * s_eval(*p.cs, x);
            CHECK(std::abs(functional_residual(spec, x)) < 1e-12 * std::abs(scale));
        }
    }
}

TEST_CASE("reflection: G(x; -alpha) = G(-x; alpha)") {
    for (const auto* cs : {&rational, &trig, &ellip}) {
        const C x(0.21, -0.04);
        CHECK(G(*cs, -0.31, x) == G(*cs, 0.31, -x));
    }
}

TEST_CASE("hyperbolic G outside its strip") {
    CHECK_THROWS_AS(G(hyper, 0.31, C(0.1, 1.6)), DomainError);
    // With continuation the functional equation still holds there.
    GammaSpec<double> spec{hyper, C(0.31, 0), {}, true};
    const C x(0.1, 1.6);
    const C scale = functional_eq_constant(hyper, C(0.31, 0)) * s_eval(hyper, x);
    CHECK(std::abs(functional_residual(spec, x)) < 1e-10 * std::abs(scale));
}

TEST_CASE("Euler Gamma") {
    CHECK(rel(euler_gamma<double>(C(0.7, 1.3)), C(0.2761287140798560014, -0.2003694083822553463)) < 1e-14);
    CHECK(std::abs(euler_gamma<double>(C(-2, 0))) > 1e14);
}

TEST_CASE("a zero real part of the period is a configuration error") {
    CHECK_THROWS_AS(G(trig, C(0, 0.3), C(0.1, 0)), ConfigError);
    CHECK_THROWS_AS(functional_eq_constant(trig, C(0, 0.3)), ConfigError);
}
