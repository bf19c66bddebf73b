// One pass/fail line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "kvd/report.hpp"
#include "kvd/verify.hpp"

using namespace kvd;

namespace {

struct Outcome {
    std::vector<ResidualRecord> records;
    double seconds = 0;
};

Outcome run(std::vector<IdentityId> ids, std::vector<CaseKind> cases, int jobs = 4) {
    VerifySettings s;
    s.identities = std::move(ids);
    s.cases = std::move(cases);
    s.jobs = jobs;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    o.records = run_verification(s);
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return o;
}

double limit(CaseKind k) { return k == CaseKind::IV ? 1e-7 : 1e-8; }

struct Tally {
    int points = 0;
    int controls = 0;
    int bad = 0;
    double worst = 0;
    double control_min = 1e300;
    std::string first_bad;

    // `ok` decides a regular record; controls must exceed `floor`.
    template <class Ok>
    void add(const ResidualRecord& r, Ok ok, double floor = kControlFloor) {
        bool good;
        if (!r.error.empty()) {
            good = false;
        } else if (r.control) {
            ++controls;
            control_min = std::min(control_min, r.residual);
            good = r.residual > floor;
        } else {
            ++points;
            worst = std::max(worst, r.residual);
            good = ok(r);
        }
        if (!good && bad++ == 0) {
            std::ostringstream os;
            os << to_string(r.identity) << "/" << to_string(r.kind) << "/" << r.variant << "#" << r.index
               << " residual " << r.residual << (r.error.empty() ? "" : " error " + r.error);
            first_bad = os.str();
        }
    }

    std::string text() const {
        char buf[200];
        if (controls)
            std::snprintf(buf, sizeof buf, "%d points, worst %.2g; %d controls, smallest %.2g", points, worst,
                          controls, control_min);
        else
            std::snprintf(buf, sizeof buf, "%d points, worst %.2g", points, worst);
        std::string s = buf;
        if (bad) s += "; " + std::to_string(bad) + " bad, first " + first_bad;
        return s;
    }
};

int failures = 0;

void report(int n, const char* name, bool ok, const std::string& detail) {
    std::printf("criterion %2d %s  %s: %s\n", n, ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string secs(double s) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.1f s", s);
    return buf;
}

const std::vector<CaseKind> all_cases{CaseKind::I, CaseKind::II, CaseKind::III, CaseKind::IV};

int per_case_min(const std::vector<ResidualRecord>& recs, bool control) {
    std::map<std::pair<CaseKind, std::string>, int> n;
    for (const auto& r : recs)
        if (r.control == control) ++n[{r.kind, r.variant}];
    int m = n.empty() ? 0 : 1 << 30;
    for (const auto& [k, v] : n) m = std::min(m, v);
    return m;
}

void criterion1() {
    const auto o = run({IdentityId::GammaFE}, all_cases);
    Tally t;
    for (const auto& r : o.records) t.add(r, [](const ResidualRecord& r) {
        return r.residual < (r.kind == CaseKind::IV ? 1e-8 : 1e-9);
    });
    const int n = per_case_min(o.records, false);
    report(1, "gamma functional equation", !t.bad && n >= 50 && o.seconds < 30,
           t.text() + ", >= " + std::to_string(n) + " per variant, " + secs(o.seconds));
}

void criterion2() {
    const auto o = run({IdentityId::Reflection}, all_cases);
    Tally t;
    for (const auto& r : o.records) t.add(r, [](const ResidualRecord& r) { return r.residual == 0; });
    const int n = per_case_min(o.records, false);
    report(2, "reflection", !t.bad && n >= 20, t.text() + ", " + secs(o.seconds));
}

void criterion3() {
    const auto o = run({IdentityId::KeyLemma}, all_cases);
    Tally t;
    for (const auto& r : o.records) t.add(r, [](const ResidualRecord& r) { return r.residual < limit(r.kind); });
    const int n = per_case_min(o.records, false);
    report(3, "key lemma", !t.bad && n >= 50 && t.controls > 0 && o.seconds < 120,
           t.text() + ", " + secs(o.seconds));
}

void criterion4() {
    const auto o = run({IdentityId::SourceThm}, all_cases);
    Tally t;
    std::map<CaseKind, std::set<std::string>> variants;
    for (const auto& r : o.records) {
        t.add(r, [](const ResidualRecord& r) { return r.residual < limit(r.kind); });
        if (!r.control) variants[r.kind].insert(r.variant);
    }
    // empty, 4 singles, 16 pairs, 16 triples
    std::size_t fewest = 1 << 30;
    for (CaseKind k : all_cases) fewest = std::min(fewest, variants[k].size());
    const int n = per_case_min(o.records, false);
    report(4, "source identity", !t.bad && fewest >= 37 && n >= 20 && t.controls > 0 && o.seconds < 300,
           t.text() + ", " + std::to_string(fewest) + " mass vectors per case, " + secs(o.seconds));
}

void criterion5() {
    const auto o = run({IdentityId::Lemma1}, {CaseKind::I, CaseKind::II});
    Tally t;
    for (const auto& r : o.records) t.add(r, [](const ResidualRecord& r) { return r.residual < 1e-8; });
    report(5, "conjugation equivalence", !t.bad && t.controls > 0, t.text() + ", " + secs(o.seconds));
}

void criterion6() {
    const auto o = run({IdentityId::Cor1, IdentityId::Cor2, IdentityId::Cor3, IdentityId::Cor4, IdentityId::Cor5,
                        IdentityId::Cor6},
                       all_cases);
    Tally t;
    std::set<IdentityId> ids;
    for (const auto& r : o.records) {
        t.add(r, [](const ResidualRecord& r) { return r.residual < limit(r.kind); });
        ids.insert(r.identity);
    }
    report(6, "corollaries", !t.bad && ids.size() == 6 && t.controls > 0, t.text() + ", " + secs(o.seconds));
}

void criterion7() {
    const auto o = run({IdentityId::AntiSymmetry, IdentityId::Swap}, all_cases);
    Tally t;
    // Controls here are the transformations taken literally; the expectation is that they fail.
    for (const auto& r : o.records) t.add(r, [](const ResidualRecord& r) { return r.residual < 1e-10; }, 1e-6);
    const int n = per_case_min(o.records, false);
    report(7, "anti-symmetry and swap", !t.bad && n >= 5, t.text() + ", " + secs(o.seconds));
}

void criterion8() {
    const auto o = run({IdentityId::QuasiInvariance}, {CaseKind::II});
    Tally t;
    for (const auto& r : o.records) t.add(r, [](const ResidualRecord& r) { return r.residual < 1e-8; });
    report(8, "quasi-invariance", !t.bad && t.controls > 0, t.text() + ", " + secs(o.seconds));
}

void criterion9() {
    const auto o = run({IdentityId::Oddness, IdentityId::QuasiPeriod, IdentityId::Duplication,
                        IdentityId::ThetaProduct},
                       all_cases);
    Tally t;
    for (const auto& r : o.records) t.add(r, [](const ResidualRecord& r) { return r.residual < 1e-10; });
    report(9, "s-function suite", !t.bad && t.points >= 1000 && o.seconds < 10, t.text() + ", " + secs(o.seconds));
}

std::string full_payload(int jobs) {
    RunConfig cfg;
    cfg.settings.identities = all_identities();
    cfg.settings.jobs = jobs;
    const auto recs = run_verification(cfg.settings);
    std::ostringstream os;
    write_json_lines(os, cfg, recs, ReportMeta{jobs == 1 ? "first" : "second", double(jobs), {}});
    return report_payload(os.str());
}

void criterion10() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string a = full_payload(1);
    const std::string b = full_payload(4);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(10, "determinism", a == b && !a.empty(),
           std::to_string(a.size()) + " payload bytes, jobs 1 vs 4 " + (a == b ? "identical" : "differ") + ", " +
               secs(s));
}

}  // namespace

int main() {
    void (*criteria[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                            criterion6, criterion7, criterion8, criterion9, criterion10};
    for (std::size_t i = 0; i < std::size(criteria); ++i) {
        try {
            criteria[i]();
        } catch (const std::exception& e) {
            report(int(i + 1), "exception", false, e.what());
        }
    }
    std::printf("%d of 10 criteria failed\n", failures);
    return failures ? 1 : 0;
}
