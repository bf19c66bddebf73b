#include <doctest.h>

#include <limits>
#include <sstream>

#include "kvd/errors.hpp"
#include "kvd/report.hpp"

using namespace kvd;
using nlohmann::json;

namespace {

ResidualRecord sample_record(int index, double residual) {
    ResidualRecord r;
    r.identity = IdentityId::SourceThm;
    r.kind = CaseKind::II;
    r.variant = "masses=P1";
    r.seed = 123456789012345ULL;
    r.index = index;
    r.point = {{0.1, -0.2}, {1.0 / 3.0, 2e-17}};
    r.params = {1.7, 0.31};
    r.residual = residual;
    r.scale = 4.5;
    r.tolerance = 1e-9;
    r.pass = residual < 1e-9;
    return r;
}

std::string report_text(const std::vector<ResidualRecord>& recs, const std::string& stamp) {
    std::ostringstream os;
    write_json_lines(os, RunConfig{}, recs, ReportMeta{stamp, 1.5, {}});
    return os.str();
}

}  // namespace

TEST_CASE("run configuration round-trips with every optional set") {
    RunConfig c;
    c.settings.cases = {CaseKind::II, CaseKind::IV};
    c.settings.identities = {IdentityId::Swap};
    c.settings.samples = 7;
    c.settings.seed = 99;
    c.settings.tol = 1e-11;
    c.settings.max_n = 2;
    c.settings.no_balance = true;
    c.settings.masses = std::vector<MassTag>{MassTag::P1, MassTag::M_INV_L};
    c.settings.particles = ParticleCounts{1, 1, 0, 1};
    c.settings.g = std::vector<double>{0.1, 0.2, 0.3, 0.4};
    c.settings.lambda = 1.9;
    c.settings.beta = 0.25;
    c.settings.r = 2.0;
    c.settings.a = 1.1;
    c.settings.extended = true;
    c.settings.policy.product_terms = 321;
    c.out = "r.jsonl";
    c.format = "json-lines";
    CHECK(run_config_from_json(to_json(c)) == c);
}

TEST_CASE("configuration fields override the base and unknown fields are named") {
    RunConfig base;
    base.settings.samples = 11;
    base.settings.seed = 5;
    const RunConfig c = run_config_from_json(json{{"seed", 8}}, base);
    CHECK(c.settings.seed == 8);
    CHECK(c.settings.samples == 11);
    CHECK_THROWS_WITH_AS(run_config_from_json(json{{"sampels", 3}}), doctest::Contains("sampels"), ConfigError);
    CHECK_THROWS_WITH_AS(run_config_from_json(json{{"seed", "x"}}), doctest::Contains("seed"), ConfigError);
}

TEST_CASE("floats are written with 17 significant digits") {
    CHECK(dump_json(json(0.1)) == "0.10000000000000001");
    CHECK(dump_json(json(std::numeric_limits<double>::infinity())) == "null");
    const double x = 1.0 / 3.0;
    CHECK(json::parse(dump_json(json(x))).get<double>() == x);
}

TEST_CASE("records round-trip exactly") {
    auto r = sample_record(4, 2.718281828459045e-13);
    r.flag = "literal";
    const auto back = record_from_json(json::parse(dump_json(to_json(r))));
    CHECK(back.identity == r.identity);
    CHECK(back.kind == r.kind);
    CHECK(back.variant == r.variant);
    CHECK(back.seed == r.seed);
    CHECK(back.index == r.index);
    CHECK(back.point == r.point);
    CHECK(back.params == r.params);
    CHECK(back.residual == r.residual);
    CHECK(back.pass == r.pass);
    CHECK(back.flag == r.flag);
}

TEST_CASE("json-lines reports read back and the payload excludes the header") {
    const std::vector<ResidualRecord> recs{sample_record(0, 1e-14), sample_record(1, 2e-14)};
    const std::string a = report_text(recs, "2026-01-01T00:00:00Z");
    const std::string b = report_text(recs, "2026-02-02T00:00:00Z");
    CHECK(a != b);
    CHECK(report_payload(a) == report_payload(b));
    std::istringstream is(a);
    const auto parsed = read_json_lines(is, "a.jsonl");
    REQUIRE(parsed.records.size() == 2);
    CHECK(parsed.records[1].residual == 2e-14);
    CHECK(parsed.header["format"] == "kvd-report");
}

TEST_CASE("a corrupt record is reported by its index") {
    std::string text = report_text({sample_record(0, 1e-14), sample_record(1, 2e-14)}, "t");
    text += "{not json\n";
    std::istringstream is(text);
    CHECK_THROWS_WITH_AS(read_json_lines(is, "bad.jsonl"), doctest::Contains("record 2"), ReportError);
    std::istringstream missing("{\"type\":\"record\"}\n");
    CHECK_THROWS_AS(read_json_lines(missing, "m.jsonl"), ReportError);
}

TEST_CASE("merged summaries add sample counts") {
    std::vector<ResidualRecord> recs{sample_record(0, 1e-14), sample_record(1, 2e-14)};
    auto other = recs;
    for (auto& r : other) r.seed = 2;
    recs.insert(recs.end(), other.begin(), other.end());
    const auto reps = summarize(recs);
    REQUIRE(reps.size() == 1);
    CHECK(reps[0].sample_count == 4);
    CHECK(reps[0].max_rel_residual == 2e-14);
}

TEST_CASE("csv and text outputs") {
    const std::vector<ResidualRecord> recs{sample_record(0, 1e-14), sample_record(1, 1e-3)};
    std::ostringstream csv;
    write_csv(csv, recs);
    CHECK(csv.str().rfind("identity,case,variant,control,seed,index,residual,scale,tolerance,pass,flag,error\n", 0) == 0);
    std::ostringstream text;
    write_text(text, recs);
    CHECK(text.str().find("source") != std::string::npos);
    CHECK(text.str().find("1/2") != std::string::npos);
}
