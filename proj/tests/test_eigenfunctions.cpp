#include <doctest.h>

#include "kvd/eigenfunctions.hpp"
#include "kvd/errors.hpp"
#include "kvd/verify.hpp"
#include "oracle.hpp"

using namespace kvd;
using kvd::test::C;
using kvd::test::rel;

namespace {

CouplingSet<double> couplings(const CaseParams<double>& cs, double lambda = 1.7, double beta = 0.31) {
    CouplingSet<double> cp;
    cp.lambda = lambda;
    cp.beta = beta;
    const double g[] = {0.13, -0.27, 0.05, 0.31, -0.12, 0.22, -0.36, 0.08};
    cp.g.assign(g, g + 2 * cs.rho + 2);
    return cp;
}

}  // namespace

TEST_CASE("square-root continuation follows the path") {
    BranchTracker<double> bt;
    bt.reference_point = {C(0, 0)};
    const auto expo = [](const cvec<double>& X) { return std::exp(X[0]); };
    CHECK(std::abs(bt.continue_root(expo, {C(0, 2 * M_PI)}) - C(-1, 0)) < 1e-12);
    CHECK(std::abs(bt.continue_root(expo, {C(0, 2 * M_PI)}, -1) - C(1, 0)) < 1e-12);

    bt.reference_point = {C(-1, 0)};
    const auto ident = [](const cvec<double>& X) { return X[0]; };
    CHECK_THROWS_AS(bt.continue_root(ident, {C(1, 0)}), BranchError);
}

TEST_CASE("closure and direct shift ratios agree") {
    for (CaseKind k : {CaseKind::I, CaseKind::II, CaseKind::III}) {
        const auto cs = default_case(k, VerifySettings{});
        const auto cp = couplings(cs);
        const auto F = cauchy_interaction(cs, cp, 2, 1);
        const cvec<double> X{C(0.31, 0.05), C(-0.44, 0.02), C(0.12, -0.07)};
        for (std::size_t var = 0; var < X.size(); ++var) {
            const C delta(0, var < 2 ? cp.beta : -cp.beta);
            CHECK(rel(F.closure_ratio(X, var, delta), F.direct_ratio(X, var, delta)) < 1e-11);
        }
    }
}

TEST_CASE("a shift that is not a multiple of the period is rejected") {
    const auto cs = default_case(CaseKind::II, VerifySettings{});
    const auto F = groundstate_function(cs, couplings(cs), 2);
    CHECK_THROWS_AS(F.closure_ratio_squared({C(0.3, 0), C(-0.2, 0)}, 0, C(0, 0.123)), DomainError);
}

TEST_CASE("single-particle eigenfunction squares to psi^2") {
    Configuration<double> cf;
    cf.cs = default_case(CaseKind::II, VerifySettings{});
    cf.couplings = couplings(cf.cs);
    const C x(0.37, 0.04);
    for (MassTag m : {MassTag::P1, MassTag::M1, MassTag::P_INV_L, MassTag::M_INV_L}) {
        BranchTracker<double> bt;
        bt.reference_point = {C(0.3, 0)};
        const C psi = psi_single(cf, x, m, bt);
        CHECK(rel(psi * psi, psi_squared(cf.cs, cf.couplings, x, m)) < 1e-12);
    }
}

TEST_CASE("ratios of the product eigenfunction do not depend on the global sheet") {
    Configuration<double> cf;
    cf.cs = default_case(CaseKind::I, VerifySettings{});
    cf.couplings = couplings(cf.cs);
    cf.masses = {MassTag::P1, MassTag::M_INV_L};
    const cvec<double> Y{C(0.3, 0.05), C(-0.5, 0.1)};
    const cvec<double> Yp{C(0.35, 0.02), C(-0.45, 0.08)};
    BranchTracker<double> plus;
    plus.reference_point = {C(0.2, 0), C(-0.6, 0)};
    const auto F = source_eigenfunction(cf);
    BranchTracker<double> minus = plus;
    minus.reference_sheet.assign(F.root_factor_count(), -1);
    const C a = F.value(Yp, plus) / F.value(Y, plus);
    const C b = F.value(Yp, minus) / F.value(Y, minus);
    CHECK(rel(a, b) < 1e-12);
}

TEST_CASE("ratio constancy of a function with itself vanishes") {
    const auto cs = default_case(CaseKind::III, VerifySettings{});
    const auto F = kernel_cauchy_function(cs, couplings(cs), 1, 1);
    const std::vector<cvec<double>> pts{{C(0.2, 0.1), C(-0.3, 0.05)}, {C(0.5, -0.1), C(0.1, 0.2)}};
    CHECK(ratio_constancy(F, F, pts) < 1e-14);
}
