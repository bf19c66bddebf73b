#include "kvd/report.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "kvd/errors.hpp"

namespace kvd {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt3(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

void dump_into(const json& j, std::string& out) {
    switch (j.type()) {
        case json::value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                out += json(it.key()).dump();
                out += ':';
                dump_into(it.value(), out);
            }
            out += '}';
            return;
        }
        case json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                dump_into(j[i], out);
            }
            out += ']';
            return;
        }
        case json::value_t::number_float: {
            const double v = j.get<double>();
            out += std::isfinite(v) ? fmt17(v) : "null";
            return;
        }
        default: out += j.dump();
    }
}

// Field access with diagnostics that name the field.
template <class T>
T field_as(const json& j, const char* name) {
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("field '") + name + "': wrong type or missing");
    }
}

double number_or_nan(const json& j, const char* name) {
    if (!j.contains(name)) throw ConfigError(std::string("field '") + name + "' missing");
    if (j.at(name).is_null()) return std::numeric_limits<double>::quiet_NaN();
    return field_as<double>(j, name);
}

json complex_pair(const std::complex<double>& z) { return json::array({z.real(), z.imag()}); }

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

json policy_json(const TruncationPolicy& p) {
    return {{"product_terms", p.product_terms},       {"quadrature_points", p.quadrature_points},
            {"quadrature_cutoff", p.quadrature_cutoff}, {"target_rel_err", p.target_rel_err},
            {"pole_floor", p.pole_floor},             {"max_nome", p.max_nome}};
}

template <class T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string dump_json(const json& j) {
    std::string out;
    dump_into(j, out);
    return out;
}

// ---- RunConfig -----------------------------------------------------------

json to_json(const RunConfig& c) {
    const auto& s = c.settings;
    json cases = json::array();
    for (CaseKind k : s.cases) cases.push_back(std::string(to_string(k)));
    json ids = json::array();
    for (IdentityId id : s.identities) ids.push_back(std::string(to_string(id)));
    json masses = nullptr;
    if (s.masses) {
        masses = json::array();
        for (MassTag m : *s.masses) masses.push_back(std::string(to_string(m)));
    }
    json particles = nullptr;
    if (s.particles) particles = {s.particles->N, s.particles->Nt, s.particles->M, s.particles->Mt};
    return {{"cases", cases},
            {"identities", ids},
            {"samples", s.samples},
            {"seed", s.seed},
            {"tol", optional_json(s.tol)},
            {"policy", policy_json(s.policy)},
            {"jobs", s.jobs},
            {"max_n", s.max_n},
            {"no_balance", s.no_balance},
            {"masses", masses},
            {"particles", particles},
            {"g", optional_json(s.g)},
            {"lambda", optional_json(s.lambda)},
            {"beta", optional_json(s.beta)},
            {"r", optional_json(s.r)},
            {"a", optional_json(s.a)},
            {"precision", s.extended ? "ext" : "double"},
            {"out", c.out},
            {"format", c.format}};
}

RunConfig run_config_from_json(const json& j, const RunConfig& base) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    RunConfig c = base;
    auto& s = c.settings;
    auto opt_double = [&](const char* name, std::optional<double>& dst) {
        if (!j.contains(name)) return;
        if (j.at(name).is_null()) dst.reset();
        else dst = field_as<double>(j, name);
    };
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "cases") {
            s.cases.clear();
            for (const auto& v : field_as<std::vector<std::string>>(j, "cases")) s.cases.push_back(parse_case(v));
            if (s.cases.empty()) throw ConfigError("field 'cases': at least one case");
        } else if (key == "identities") {
            s.identities.clear();
            for (const auto& v : field_as<std::vector<std::string>>(j, "identities"))
                s.identities.push_back(parse_identity(v));
        } else if (key == "samples") {
            s.samples = field_as<int>(j, "samples");
        } else if (key == "seed") {
            s.seed = field_as<std::uint64_t>(j, "seed");
        } else if (key == "tol") {
            opt_double("tol", s.tol);
        } else if (key == "policy") {
            const json& p = it.value();
            if (!p.is_object()) throw ConfigError("field 'policy': expected an object");
            for (auto pi = p.begin(); pi != p.end(); ++pi) {
                const std::string& k = pi.key();
                if (k == "product_terms") s.policy.product_terms = field_as<int>(p, "product_terms");
                else if (k == "quadrature_points") s.policy.quadrature_points = field_as<int>(p, "quadrature_points");
                else if (k == "quadrature_cutoff") s.policy.quadrature_cutoff = field_as<double>(p, "quadrature_cutoff");
                else if (k == "target_rel_err") s.policy.target_rel_err = field_as<double>(p, "target_rel_err");
                else if (k == "pole_floor") s.policy.pole_floor = field_as<double>(p, "pole_floor");
                else if (k == "max_nome") s.policy.max_nome = field_as<double>(p, "max_nome");
                else throw ConfigError("field 'policy." + k + "': unknown");
            }
        } else if (key == "jobs") {
            s.jobs = field_as<int>(j, "jobs");
        } else if (key == "max_n") {
            s.max_n = field_as<int>(j, "max_n");
        } else if (key == "no_balance") {
            s.no_balance = field_as<bool>(j, "no_balance");
        } else if (key == "masses") {
            if (it.value().is_null()) {
                s.masses.reset();
            } else {
                std::vector<MassTag> m;
                for (const auto& v : field_as<std::vector<std::string>>(j, "masses")) m.push_back(parse_mass(v));
                s.masses = m;
            }
        } else if (key == "particles") {
            if (it.value().is_null()) {
                s.particles.reset();
            } else {
                const auto v = field_as<std::vector<int>>(j, "particles");
                if (v.size() != 4) throw ConfigError("field 'particles': expected [N, Ntilde, M, Mtilde]");
                s.particles = ParticleCounts{v[0], v[1], v[2], v[3]};
            }
        } else if (key == "g") {
            if (it.value().is_null()) s.g.reset();
            else s.g = field_as<std::vector<double>>(j, "g");
        } else if (key == "lambda") {
            opt_double("lambda", s.lambda);
        } else if (key == "beta") {
            opt_double("beta", s.beta);
        } else if (key == "r") {
            opt_double("r", s.r);
        } else if (key == "a") {
            opt_double("a", s.a);
        } else if (key == "precision") {
            const auto p = field_as<std::string>(j, "precision");
            if (p != "double" && p != "ext") throw ConfigError("field 'precision': expected double or ext");
            s.extended = p == "ext";
        } else if (key == "out") {
            c.out = field_as<std::string>(j, "out");
        } else if (key == "format") {
            c.format = field_as<std::string>(j, "format");
            if (c.format != "text" && c.format != "json-lines" && c.format != "csv")
                throw ConfigError("field 'format': expected text, json-lines or csv");
        } else {
            throw ConfigError("field '" + key + "': unknown");
        }
    }
    return c;
}

RunConfig load_run_config(const std::string& path, const RunConfig& base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file '" + path + "' cannot be read");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    return run_config_from_json(j, base);
}

// ---- records -------------------------------------------------------------

json to_json(const ResidualRecord& r) {
    json point = json::array();
    for (const auto& z : r.point) point.push_back(complex_pair(z));
    return {{"type", "record"},
            {"identity", std::string(to_string(r.identity))},
            {"case", std::string(to_string(r.kind))},
            {"variant", r.variant},
            {"control", r.control},
            {"seed", r.seed},
            {"index", r.index},
            {"point", point},
            {"params", r.params},
            {"residual", r.residual},
            {"scale", r.scale},
            {"tolerance", r.tolerance},
            {"pass", r.pass},
            {"flag", r.flag},
            {"error", r.error}};
}

ResidualRecord record_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("expected an object");
    if (field_as<std::string>(j, "type") != "record") throw ConfigError("field 'type': expected \"record\"");
    ResidualRecord r;
    r.identity = parse_identity(field_as<std::string>(j, "identity"));
    r.kind = parse_case(field_as<std::string>(j, "case"));
    r.variant = field_as<std::string>(j, "variant");
    r.control = field_as<bool>(j, "control");
    r.seed = field_as<std::uint64_t>(j, "seed");
    r.index = field_as<int>(j, "index");
    for (const auto& p : field_as<std::vector<std::vector<double>>>(j, "point")) {
        if (p.size() != 2) throw ConfigError("field 'point': expected [re, im] pairs");
        r.point.emplace_back(p[0], p[1]);
    }
    r.params = field_as<std::vector<double>>(j, "params");
    r.residual = number_or_nan(j, "residual");
    r.scale = number_or_nan(j, "scale");
    r.tolerance = field_as<double>(j, "tolerance");
    r.pass = field_as<bool>(j, "pass");
    r.flag = field_as<std::string>(j, "flag");
    r.error = field_as<std::string>(j, "error");
    return r;
}

json to_json(const ResidualReport& r) {
    return {{"identity", std::string(to_string(r.identity))},
            {"case", std::string(to_string(r.kind))},
            {"variant", r.variant},
            {"control", r.control},
            {"sample_count", r.sample_count},
            {"max_rel_residual", r.max_rel_residual},
            {"min_rel_residual", r.min_rel_residual},
            {"normalization_scale", r.normalization_scale},
            {"tolerance", r.tolerance},
            {"verdict", r.pass ? "pass" : "fail"},
            {"seed", r.seed}};
}

void write_json_lines(std::ostream& os, const RunConfig& config, const std::vector<ResidualRecord>& records,
                      const ReportMeta& meta) {
    os << dump_json({{"type", "header"},
                     {"format", "kvd-report"},
                     {"version", 1},
                     {"timestamp", meta.timestamp},
                     {"runtime_seconds", meta.runtime_seconds},
                     {"jobs", config.settings.jobs},
                     {"out", config.out}})
       << '\n';
    // Execution details live in the header; the config line holds only what determines the records.
    json cfg = to_json(config);
    cfg.erase("jobs");
    cfg.erase("out");
    cfg["type"] = "config";
    os << dump_json(cfg) << '\n';
    int passed = 0;
    for (const auto& r : records) {
        os << dump_json(to_json(r)) << '\n';
        passed += r.pass ? 1 : 0;
    }
    json reports = json::array();
    for (const auto& rep : summarize(records)) reports.push_back(to_json(rep));
    const int total = meta.stats.accepted + meta.stats.rejected;
    os << dump_json({{"type", "summary"},
                     {"records", records.size()},
                     {"passed", passed},
                     {"pass", passed == int(records.size())},
                     {"sampler",
                      {{"accepted", meta.stats.accepted},
                       {"rejected", meta.stats.rejected},
                       {"rejection_rate", total ? double(meta.stats.rejected) / total : 0.0}}},
                     {"reports", reports}})
       << '\n';
}

void write_csv(std::ostream& os, const std::vector<ResidualRecord>& records) {
    os << "identity,case,variant,control,seed,index,residual,scale,tolerance,pass,flag,error\n";
    for (const auto& r : records) {
        os << to_string(r.identity) << ',' << to_string(r.kind) << ',' << csv_quote(r.variant) << ','
           << (r.control ? 1 : 0) << ',' << r.seed << ',' << r.index << ',' << fmt17(r.residual) << ','
           << fmt17(r.scale) << ',' << fmt17(r.tolerance) << ',' << (r.pass ? 1 : 0) << ',' << csv_quote(r.flag)
           << ',' << csv_quote(r.error) << '\n';
    }
}

void write_summary_matrix(std::ostream& os, const std::vector<ResidualRecord>& records) {
    std::map<std::pair<int, int>, MatrixCell> cells;
    std::vector<IdentityId> ids;
    std::vector<CaseKind> kinds;
    for (const auto& r : records) {
        auto& c = cells[{int(r.identity), int(r.kind)}];
        ++c.total;
        c.passed += r.pass ? 1 : 0;
        if (!r.control && !(r.residual <= c.worst)) c.worst = r.residual;
        if (std::find(ids.begin(), ids.end(), r.identity) == ids.end()) ids.push_back(r.identity);
        if (std::find(kinds.begin(), kinds.end(), r.kind) == kinds.end()) kinds.push_back(r.kind);
    }
    std::sort(ids.begin(), ids.end());
    std::sort(kinds.begin(), kinds.end());
    os << std::left << std::setw(18) << "identity";
    for (CaseKind k : kinds) os << std::setw(26) << to_string(k);
    os << '\n';
    for (IdentityId id : ids) {
        os << std::setw(18) << to_string(id);
        for (CaseKind k : kinds) {
            auto it = cells.find({int(id), int(k)});
            if (it == cells.end()) {
                os << std::setw(26) << "-";
                continue;
            }
            const auto& c = it->second;
            std::ostringstream cell;
            cell << (c.passed == c.total ? "✓ " : "✗ ") << c.passed << '/' << c.total << ' '
                 << fmt3(c.worst);
            // setw counts bytes; the mark is three bytes wide in UTF-8.
            os << std::setw(28) << cell.str();
        }
        os << '\n';
    }
}

void write_text(std::ostream& os, const std::vector<ResidualRecord>& records) {
    os << std::left << std::setw(18) << "identity" << std::setw(5) << "case" << std::setw(34) << "variant"
       << std::right << std::setw(6) << "n" << std::setw(11) << "max" << std::setw(11) << "min" << std::setw(9)
       << "tol" << "  verdict\n";
    for (const auto& rep : summarize(records)) {
        os << std::left << std::setw(18) << to_string(rep.identity) << std::setw(5) << to_string(rep.kind)
           << std::setw(34) << rep.variant << std::right << std::setw(6) << rep.sample_count << std::setw(11)
           << fmt3(rep.max_rel_residual) << std::setw(11) << fmt3(rep.min_rel_residual) << std::setw(9)
           << fmt3(rep.tolerance) << "  " << (rep.pass ? "pass" : "FAIL") << (rep.control ? " (control)" : "")
           << '\n';
    }
    os << '\n';
    write_summary_matrix(os, records);
}

// ---- reading -------------------------------------------------------------

ParsedReport read_json_lines(std::istream& is, const std::string& source) {
    ParsedReport out;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = source + ": record " + std::to_string(out.records.size()) + " (line " +
                                  std::to_string(line_no) + ")";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ReportError(where + ": not valid JSON");
        }
        const std::string type = j.is_object() && j.contains("type") && j["type"].is_string()
                                     ? j["type"].get<std::string>()
                                     : "";
        if (type == "header") {
            out.header = j;
        } else if (type == "config" || type == "summary") {
            continue;
        } else {
            try {
                out.records.push_back(record_from_json(j));
            } catch (const Error& e) {
                throw ReportError(where + ": " + e.what());
            }
        }
    }
    return out;
}

ParsedReport read_report_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ReportError("report file '" + path + "' cannot be read");
    return read_json_lines(in, path);
}

std::string report_payload(const std::string& text) {
    std::istringstream is(text);
    std::string line, out;
    while (std::getline(is, line)) {
        const json j = json::parse(line, nullptr, false);
        if (j.is_object() && j.value("type", "") == "header") continue;
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace kvd
