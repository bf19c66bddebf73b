#include <doctest.h>

#include "kvd/errors.hpp"
#include "kvd/sfun.hpp"
#include "oracle.hpp"

using namespace kvd;
using kvd::test::C;
using kvd::test::rel;

namespace {
const auto rational = CaseParams<double>::make(CaseKind::I, 1.0, 1.0);
const auto trig = CaseParams<double>::make(CaseKind::II, 1.0, 1.0);
const auto hyper = CaseParams<double>::make(CaseKind::III, 1.0, 1.3);
const auto ellip = CaseParams<double>::make(CaseKind::IV, 1.0, 1.4);
}  // namespace

TEST_CASE("s matches reference values in every case") {
    CHECK(s_eval(rational, C(2, 0)) == C(2, 0));
    CHECK(rel(s_eval(trig, C(0.3, 0.2)), C(0.3014503384289114664, 0.1923436298021928222)) < 1e-14);
    CHECK(rel(s_eval(hyper, C(0.3, 0.2)), C(0.2895258419092581008, 0.2450939172190759374)) < 1e-14);
    CHECK(rel(s_eval(ellip, C(0.3, 0.1)), C(0.4949161906095500362, 0.1683806987806429277)) < 1e-14);
}

TEST_CASE("theta series matches the reference and the product form") {
    const C tau(0.2, 0.9), z(0.4, 0.2);
    CHECK(rel(theta_eval<double>(z, tau), C(0.3585746467252789687, 0.2380674803393704986)) < 1e-14);
    for (C w : {C(0.1, 0.0), C(1.3, -0.4), C(-2.0, 1.1), C(7.5, 3.0)})
        CHECK(rel(theta_eval<double>(w, tau), theta_product<double>(w, tau)) < 1e-12);
}

TEST_CASE("theta rejects a modulus outside the upper half plane") {
    CHECK_THROWS_AS(theta_eval<double>(C(0.1, 0), C(0.2, -0.1)), ConfigError);
}

TEST_CASE("truncation budget exhaustion is a domain error") {
    TruncationPolicy tight;
    tight.product_terms = 1;
    CHECK_THROWS_AS(theta_eval<double>(C(0.3, 0.2), C(0, 0.05), tight), DomainError);
}

TEST_CASE("s is odd, quasi-periodic and satisfies the duplication formula") {
    for (const auto* cs : {&rational, &trig, &hyper, &ellip}) {
        for (C x : {C(0.31, 0.07), C(-0.6, 0.13), C(0.9, -0.11)}) {
            CHECK(std::abs(s_eval(*cs, x) + s_eval(*cs, -x)) < 1e-15 * std::abs(s_eval(*cs, x)) + 1e-300);
            for (int nu = 0; nu <= cs->rho; ++nu) {
                const C lhs = s_eval(*cs, x + cs->omega[nu]);
                CHECK(rel(lhs, quasi_factor(*cs, nu, x) * s_eval(*cs, x)) < 1e-13);
            }
            CHECK(std::abs(duplication_residual(*cs, x)) < 1e-13 * std::abs(s_eval(*cs, 2.0 * x)));
        }
    }
}

TEST_CASE("lattice distance vanishes on zeros of s") {
    CHECK(lattice_distance(trig, C(M_PI, 0)) < 1e-15);
    CHECK(lattice_distance(hyper, C(0, 2.6)) < 1e-15);
    CHECK(lattice_distance(ellip, C(M_PI, 1.4)) < 1e-15);
    CHECK(std::abs(s_eval(ellip, C(M_PI, 1.4))) < 1e-13);
    CHECK(lattice_distance(ellip, C(0.2, 0.1)) == doctest::Approx(std::abs(C(0.2, 0.1))));
}

TEST_CASE("quasi_factor rejects an out-of-range period index") {
    CHECK_THROWS_AS(quasi_factor(trig, 2, C(0.1, 0)), ConfigError);
}

TEST_CASE("extended precision agrees with the reference to many digits") {
    const auto cs = CaseParams<ext_real>::make(CaseKind::IV, ext_real(1), ext_real("1.4"));
    const auto pol = TruncationPolicy::for_digits(50);
    const cplx<ext_real> x(ext_real("0.3"), ext_real("0.1"));
    const cplx<ext_real> want(ext_real("0.4949161906095500362007485"), ext_real("0.168380698780642927727274"));
    CHECK(rel<ext_real>(s_eval(cs, x, pol), want) < 1e-24);
}

TEST_CASE("case names parse and print") {
    for (CaseKind k : {CaseKind::I, CaseKind::II, CaseKind::III, CaseKind::IV})
        CHECK(parse_case(to_string(k)) == k);
    CHECK_THROWS_AS(parse_case("V"), ConfigError);
}

TEST_CASE("default policy is valid in both precisions and bad fields are named") {
    CHECK_NOTHROW(TruncationPolicy{}.validate(15));
    CHECK_NOTHROW(TruncationPolicy::for_digits(50).validate(50));
    TruncationPolicy bad;
    bad.product_terms = 0;
    CHECK_THROWS_WITH_AS(bad.validate(15), doctest::Contains("product_terms"), ConfigError);
    bad = {};
    bad.max_nome = 1.0;
    CHECK_THROWS_WITH_AS(bad.validate(15), doctest::Contains("max_nome"), ConfigError);
}
