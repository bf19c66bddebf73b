#include <doctest.h>

#include "kvd/errors.hpp"
#include "kvd/verify.hpp"

using namespace kvd;

TEST_CASE("sampler and seed mixing are deterministic") {
    Sampler a(42), b(42);
    for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
    CHECK(mix_seed(1, "source/I/x", 0) == mix_seed(1, "source/I/x", 0));
    CHECK(mix_seed(1, "source/I/x", 0) != mix_seed(1, "source/I/x", 1));
    CHECK(mix_seed(1, "source/I/x", 0) != mix_seed(2, "source/I/x", 0));
    Sampler c(7);
    for (int i = 0; i < 100; ++i) {
        const double u = c.uniform(-2, 3);
        CHECK(u >= -2);
        CHECK(u < 3);
        const int k = c.below(5);
        CHECK(k >= 0);
        CHECK(k < 5);
    }
}

TEST_CASE("admissible points keep their distance from the zero lattice") {
    const auto cs = default_case(CaseKind::II, VerifySettings{});
    Sampler rng(3);
    SampleStats stats;
    for (int i = 0; i < 50; ++i) {
        const auto X = admissible_point(cs, 3, rng, 1.0, 0.2, 0.05, &stats);
        for (std::size_t j = 0; j < X.size(); ++j) {
            CHECK(lattice_distance(cs, X[j]) >= 0.05);
            CHECK(lattice_distance(cs, 2.0 * X[j]) >= 0.05);
            for (std::size_t k = j + 1; k < X.size(); ++k) {
                CHECK(lattice_distance(cs, X[j] + X[k]) >= 0.05);
                CHECK(lattice_distance(cs, X[j] - X[k]) >= 0.05);
            }
        }
    }
    CHECK(stats.accepted == 50);
    CHECK(double(stats.rejected) / (stats.accepted + stats.rejected) < 0.5);
}

TEST_CASE("admissible sampling gives up with a domain error") {
    const auto cs = default_case(CaseKind::II, VerifySettings{});
    Sampler rng(3);
    CHECK_THROWS_AS(admissible_point(cs, 2, rng, 1.0, 0.2, 10.0, nullptr, 20), DomainError);
}

TEST_CASE("sample_admissible") {
    Configuration<double> tmpl;
    tmpl.cs = default_case(CaseKind::I, VerifySettings{});
    tmpl.masses = {MassTag::P1, MassTag::M1};
    const auto a = sample_admissible(tmpl, 4, 9);
    const auto b = sample_admissible(tmpl, 4, 9);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].X.size() == 2);
        CHECK(a[i].X == b[i].X);
    }
    CHECK_THROWS_AS(sample_admissible(tmpl, 0, 9), ConfigError);
}

TEST_CASE("identity names round-trip") {
    for (IdentityId id : all_identities()) CHECK(parse_identity(to_string(id)) == id);
    CHECK_THROWS_WITH_AS(parse_identity("nope"), doctest::Contains("nope"), ConfigError);
}

namespace {
VerifySettings small(IdentityId id, CaseKind k) {
    VerifySettings s;
    s.identities = {id};
    s.cases = {k};
    s.samples = 3;
    s.max_n = 2;
    return s;
}
}  // namespace

TEST_CASE("runs are independent of the number of jobs") {
    auto s = small(IdentityId::SourceThm, CaseKind::II);
    const auto one = run_verification(s);
    s.jobs = 3;
    const auto three = run_verification(s);
    REQUIRE(one.size() == three.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].variant == three[i].variant);
        CHECK(one[i].residual == three[i].residual);
        CHECK(one[i].point == three[i].point);
    }
}

TEST_CASE("elliptic source identity passes and its unbalanced controls fail as expected") {
    const auto recs = run_verification(small(IdentityId::SourceThm, CaseKind::IV));
    REQUIRE(!recs.empty());
    bool saw_control = false;
    for (const auto& r : recs) {
        CHECK_MESSAGE(r.pass, r.variant, " ", r.residual);
        saw_control |= r.control;
    }
    CHECK(saw_control);
}

TEST_CASE("elliptic runs without balancing keep only the controls") {
    auto s = small(IdentityId::SourceThm, CaseKind::IV);
    s.no_balance = true;
    const auto recs = run_verification(s);
    REQUIRE(!recs.empty());
    for (const auto& r : recs) {
        CHECK(r.control);
        CHECK(r.pass);
    }
}

TEST_CASE("an impossibly tight tolerance fails") {
    auto s = small(IdentityId::GammaFE, CaseKind::II);
    s.tol = 1e-300;
    bool any_fail = false;
    for (const auto& r : run_verification(s)) any_fail |= !r.pass && !r.control;
    CHECK(any_fail);
}

TEST_CASE("summaries count records per variant") {
    const auto recs = run_verification(small(IdentityId::GammaFE, CaseKind::I));
    const auto reps = summarize(recs);
    int total = 0;
    for (const auto& r : reps) {
        CHECK(r.sample_count == 3);
        CHECK(r.pass);
        CHECK(r.max_rel_residual >= r.min_rel_residual);
        total += r.sample_count;
    }
    CHECK(total == int(recs.size()));
}

TEST_CASE("bad settings are configuration errors") {
    auto s = small(IdentityId::GammaFE, CaseKind::I);
    s.jobs = 0;
    CHECK_THROWS_AS(run_verification(s), ConfigError);
    s = small(IdentityId::GammaFE, CaseKind::I);
    s.lambda = 0.0;
    CHECK_THROWS_AS(run_verification(s), ConfigError);
    s = small(IdentityId::GammaFE, CaseKind::I);
    s.samples = -1;
    CHECK_THROWS_AS(run_verification(s), ConfigError);
}
