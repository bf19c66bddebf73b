// kvd: evaluate special functions and operator data, run identity checks, merge reports.

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kvd/eigenfunctions.hpp"
#include "kvd/errors.hpp"
#include "kvd/gamma.hpp"
#include "kvd/report.hpp"
#include "kvd/vandiejen.hpp"

using namespace kvd;

namespace {

enum Exit { kPass = 0, kFail = 1, kConfig = 2, kDomain = 3 };

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

double parse_real(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) throw ConfigError(what + ": '" + text + "' is not a number");
    return v;
}

// "2", "-0.5i", "0.3+0.1i", "1e-3-2e-1i", "i".
std::complex<double> parse_complex(std::string text, const std::string& what) {
    text.erase(std::remove(text.begin(), text.end(), ' '), text.end());
    if (text.empty()) throw ConfigError(what + ": empty value");
    if (text.back() != 'i' && text.back() != 'j') return {parse_real(text, what), 0.0};
    text.pop_back();
    std::size_t split_at = std::string::npos;
    for (std::size_t k = text.size(); k-- > 1;) {
        if ((text[k] == '+' || text[k] == '-') && text[k - 1] != 'e' && text[k - 1] != 'E') {
            split_at = k;
            break;
        }
    }
    const std::string re = split_at == std::string::npos ? "" : text.substr(0, split_at);
    std::string im = split_at == std::string::npos ? text : text.substr(split_at);
    if (im.empty() || im == "+") im = "1";
    if (im == "-") im = "-1";
    return {re.empty() ? 0.0 : parse_real(re, what), parse_real(im, what)};
}

std::vector<std::complex<double>> parse_point(const std::string& text) {
    std::vector<std::complex<double>> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_complex(item, "--x"));
    if (out.empty()) throw ConfigError("--x: empty point");
    return out;
}

std::string format_complex(const std::complex<double>& z) {
    std::ostringstream os;
    os << std::setprecision(17) << z.real() << (std::signbit(z.imag()) ? " - " : " + ")
       << std::abs(z.imag()) << "i";
    return os.str();
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Options shared by eval and verify.
struct ModelFlags {
    std::string case_name;
    double r = 0, a = 0, lambda = 0, beta = 0;
    std::string g, masses, particles;
    int trunc_terms = 0;
    std::string precision = "double";
    std::string format;
    std::string out;

    void attach(CLI::App* cmd) {
        cmd->add_option("--case", case_name, "I, II, III or IV");
        cmd->add_option("--r", r, "scale r (cases II, IV)");
        cmd->add_option("--a", a, "scale a (cases III, IV)");
        cmd->add_option("--g", g, "couplings g0,...");
        cmd->add_option("--lambda", lambda);
        cmd->add_option("--beta", beta);
        cmd->add_option("--masses", masses, "mass tags, e.g. P1,M_INV_L");
        cmd->add_option("--particles", particles, "N,Ntilde,M,Mtilde");
        cmd->add_option("--trunc-terms", trunc_terms, "cap on series and product terms");
        cmd->add_option("--precision", precision, "double or ext")->check(CLI::IsMember({"double", "ext"}));
        cmd->add_option("--format", format, "text, json-lines or csv")
            ->check(CLI::IsMember({"text", "json-lines", "csv"}));
        cmd->add_option("--out", out, "output path");
    }
    bool given(CLI::App* cmd, const char* name) const { return cmd->count(name) > 0; }
};

std::vector<double> parse_reals(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_real(item, what));
    return out;
}

ParticleCounts parse_particles(const std::string& text) {
    const auto v = split(text, ',');
    if (v.size() != 4) throw ConfigError("--particles: expected N,Ntilde,M,Mtilde");
    int n[4];
    for (int k = 0; k < 4; ++k) {
        const double d = parse_real(v[k], "--particles");
        if (d != std::floor(d) || d < 0) throw ConfigError("--particles: counts must be non-negative integers");
        n[k] = int(d);
    }
    return {n[0], n[1], n[2], n[3]};
}

// ---- eval ----------------------------------------------------------------

struct EvalRow {
    std::vector<std::complex<double>> x;
    std::complex<double> value;
    std::string flag;
};

int cmd_eval(CLI::App* cmd, const ModelFlags& f, const std::string& what, const std::vector<std::string>& xs,
             const std::string& alpha_text, const std::string& tau_text, int J, int sign,
             const std::string& constant) {
    const CaseKind kind = parse_case(f.case_name.empty() ? "I" : f.case_name);
    VerifySettings vs;
    if (f.given(cmd, "--r")) vs.r = f.r;
    if (f.given(cmd, "--a")) vs.a = f.a;
    TruncationPolicy pol;
    if (f.trunc_terms > 0) pol.product_terms = f.trunc_terms;
    pol.validate(15);
    vs.policy = pol;
    const CaseParams<double> cs = default_case(kind, vs);

    CouplingSet<double> cp;
    cp.lambda = f.given(cmd, "--lambda") ? f.lambda : (kind == CaseKind::IV ? 1.3 : 1.7);
    cp.beta = f.given(cmd, "--beta") ? f.beta : (kind == CaseKind::IV ? 0.5 : 0.31);
    cp.g = f.g.empty() ? std::vector<double>(std::size_t(2 * cs.rho + 2), 0.1) : parse_reals(f.g, "--g");
    const std::vector<MassTag> masses = f.masses.empty() ? std::vector<MassTag>{} : parse_masses(f.masses);
    const bool needs_couplings = what == "V" || what == "V0" || what == "E" || what == "psi2";
    if (needs_couplings) cp.validate(cs);

    std::vector<EvalRow> rows;
    int status = kPass;
    auto points = xs;
    if (points.empty() && (what == "c" || what == "E")) points.push_back("0");
    if (points.empty()) throw ConfigError("--x: at least one point");
    for (const auto& text : points) {
        EvalRow row;
        row.x = parse_point(text);
        const std::complex<double> x = row.x[0];
        try {
            if (what == "s") {
                row.value = s_eval(cs, x, pol);
                if (lattice_distance(cs, x) < pol.pole_floor) row.flag = "zero";
            } else if (what == "theta") {
                const std::complex<double> tau =
                    tau_text.empty() ? (kind == CaseKind::IV ? cs.tau() : std::complex<double>(0, 1))
                                     : parse_complex(tau_text, "--tau");
                if (!(tau.imag() > 0)) throw ConfigError("--tau: Im(tau) must be positive");
                row.value = theta_eval<double>(x, tau, pol);
            } else if (what == "gamma" || what == "c") {
                const std::complex<double> alpha =
                    alpha_text.empty() ? std::complex<double>(cp.beta, 0) : parse_complex(alpha_text, "--alpha");
                if (alpha.real() == 0) throw ConfigError("--alpha: Re(alpha) must be nonzero");
                if (what == "c") {
                    row.value = functional_eq_constant(cs, alpha, pol);
                } else {
                    if (kind == CaseKind::III && !in_hyperbolic_strip(cs, alpha.real() > 0 ? alpha : -alpha,
                                                                      alpha.real() > 0 ? x : -x))
                        throw DomainError("outside the strip of the hyperbolic integral");
                    row.value = gamma_G(GammaSpec<double>{cs, alpha, pol, false}, x);
                    if (!is_finite<double>(row.value)) throw DomainError("pole of G");
                }
            } else if (what == "V" || what == "V0" || what == "E") {
                Configuration<double> cf;
                cf.cs = cs;
                cf.couplings = cp;
                cf.masses = masses;
                cf.policy = pol;
                if (what != "E") cf.X = row.x;
                if (cf.X.size() != masses.size())
                    throw ConfigError("--masses: need one mass per coordinate of --x");
                if (what == "V") {
                    if (J < 0 || std::size_t(J) >= cf.X.size()) throw ConfigError("--J: out of range");
                    row.value = coeff_V_shift(cf, std::size_t(J), sign);
                } else if (what == "V0") {
                    row.value = coeff_V0(cf);
                } else if (constant.empty() || constant == "source") {
                    row.value = eigen_constant(cf);
                } else {
                    const ParticleCounts n = f.particles.empty() ? ParticleCounts{} : parse_particles(f.particles);
                    ConstantKind ck;
                    if (constant == "E_N") ck = ConstantKind::EN;
                    else if (constant == "C_NM") ck = ConstantKind::CNM;
                    else if (constant == "Ct_NMt") ck = ConstantKind::CtNMt;
                    else if (constant == "E_NNt") ck = ConstantKind::ENNt;
                    else if (constant == "C_NNtMMt") ck = ConstantKind::CNNtMMt;
                    else if (constant == "c0") ck = ConstantKind::C0;
                    else throw ConfigError("--constant: unknown '" + constant + "'");
                    row.value = eigen_constant(cs, cp, ck, n, 0.0, pol);
                }
            } else if (what == "psi2") {
                if (masses.size() != 1) throw ConfigError("--masses: psi2 takes exactly one mass");
                row.value = psi_squared(cs, cp, x, masses[0], pol);
            } else {
                throw ConfigError("--what: unknown '" + what + "'");
            }
        } catch (const DomainError& e) {
            row.value = {std::nan(""), std::nan("")};
            row.flag = std::string("pole: ") + e.what();
            status = kDomain;
        }
        rows.push_back(row);
    }

    std::ofstream file;
    if (!f.out.empty()) {
        file.open(f.out);
        if (!file) throw ConfigError("--out: cannot write '" + f.out + "'");
    }
    std::ostream& os = f.out.empty() ? std::cout : file;
    const std::string format = f.format.empty() ? "text" : f.format;
    if (format == "json-lines") {
        for (const auto& r : rows) {
            nlohmann::json x = nlohmann::json::array();
            for (const auto& z : r.x) x.push_back({z.real(), z.imag()});
            os << dump_json({{"what", what},
                             {"case", std::string(to_string(kind))},
                             {"x", x},
                             {"value", {r.value.real(), r.value.imag()}},
                             {"flag", r.flag}})
               << '\n';
        }
    } else if (format == "csv") {
        os << "x,value_re,value_im,flag\n";
        for (const auto& r : rows) {
            std::string xs_text;
            for (std::size_t k = 0; k < r.x.size(); ++k) xs_text += (k ? "; " : "") + format_complex(r.x[k]);
            os << '"' << xs_text << "\"," << std::setprecision(17) << r.value.real() << ',' << r.value.imag()
               << ",\"" << r.flag << "\"\n";
        }
    } else {
        for (const auto& r : rows) {
            std::string xs_text;
            for (std::size_t k = 0; k < r.x.size(); ++k) xs_text += (k ? ", " : "") + format_complex(r.x[k]);
            // Real values print as plain numbers, so "eval s --x 2" shows 2.
            std::ostringstream v;
            if (r.value.imag() == 0) v << std::setprecision(17) << r.value.real();
            else if (r.value.real() == 0) v << std::setprecision(17) << r.value.imag() << "i";
            else v << format_complex(r.value);
            os << std::left << std::setw(40) << xs_text << "  " << std::setw(44) << v.str()
               << (r.flag.empty() ? "" : "  [" + r.flag + "]") << '\n';
        }
    }
    return status;
}

// ---- verify --------------------------------------------------------------

int cmd_verify(CLI::App* cmd, const ModelFlags& f, const std::string& config_path, const std::string& cases,
               const std::vector<std::string>& identities, bool all, int samples, std::uint64_t seed, double tol,
               bool no_balance, int jobs, int max_n) {
    RunConfig rc;
    const bool ext_flag = f.given(cmd, "--precision") && f.precision == "ext";
    if (ext_flag) rc.settings.policy = TruncationPolicy::for_digits(scalar_traits<ext_real>::digits10);
    if (!config_path.empty()) rc = load_run_config(config_path, rc);
    auto& s = rc.settings;

    if (f.given(cmd, "--case") && f.given(cmd, "--cases")) throw ConfigError("--case and --cases are exclusive");
    if (f.given(cmd, "--case")) s.cases = {parse_case(f.case_name)};
    if (f.given(cmd, "--cases")) {
        s.cases.clear();
        for (const auto& c : split(cases, ',')) s.cases.push_back(parse_case(c));
        if (s.cases.empty()) throw ConfigError("--cases: at least one case");
    }
    if (all && !identities.empty()) throw ConfigError("--all and --identity are exclusive");
    if (all) s.identities.clear();
    if (!identities.empty()) {
        s.identities.clear();
        for (const auto& list : identities)
            for (const auto& id : split(list, ',')) s.identities.push_back(parse_identity(id));
    }
    if (f.given(cmd, "--r")) s.r = f.r;
    if (f.given(cmd, "--a")) s.a = f.a;
    if (f.given(cmd, "--lambda")) s.lambda = f.lambda;
    if (f.given(cmd, "--beta")) s.beta = f.beta;
    if (f.given(cmd, "--g")) s.g = parse_reals(f.g, "--g");
    if (f.given(cmd, "--masses")) s.masses = parse_masses(f.masses);
    if (f.given(cmd, "--particles")) s.particles = parse_particles(f.particles);
    if (f.given(cmd, "--samples")) s.samples = samples;
    if (f.given(cmd, "--seed")) s.seed = seed;
    if (f.given(cmd, "--tol")) s.tol = tol;
    if (f.given(cmd, "--no-balance")) s.no_balance = no_balance;
    if (f.given(cmd, "--jobs")) s.jobs = jobs;
    if (f.given(cmd, "--max-n")) s.max_n = max_n;
    if (f.given(cmd, "--precision")) s.extended = ext_flag;
    if (s.extended && s.policy == TruncationPolicy{})
        s.policy = TruncationPolicy::for_digits(scalar_traits<ext_real>::digits10);
    if (f.given(cmd, "--trunc-terms")) s.policy.product_terms = f.trunc_terms;
    if (f.given(cmd, "--out")) rc.out = f.out;
    if (f.given(cmd, "--format")) rc.format = f.format;
    else if (!rc.out.empty() && !f.given(cmd, "--config")) rc.format = "json-lines";
    if (s.samples < 0 || (f.given(cmd, "--samples") && samples < 1)) throw ConfigError("--samples: must be >= 1");

    const auto t0 = std::chrono::steady_clock::now();
    ReportMeta meta;
    meta.timestamp = utc_timestamp();
    const auto records = run_verification(s, &meta.stats);
    meta.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ofstream file;
    if (!rc.out.empty()) {
        file.open(rc.out);
        if (!file) throw ConfigError("--out: cannot write '" + rc.out + "'");
    }
    std::ostream& os = rc.out.empty() ? std::cout : file;
    if (rc.format == "json-lines") write_json_lines(os, rc, records, meta);
    else if (rc.format == "csv") write_csv(os, records);
    else write_text(os, records);

    int passed = 0, errors = 0;
    for (const auto& r : records) {
        passed += r.pass ? 1 : 0;
        errors += r.error.empty() ? 0 : 1;
    }
    const int total_points = meta.stats.accepted + meta.stats.rejected;
    std::ostream& note = (rc.out.empty() && rc.format != "text") ? std::cerr : std::cout;
    note << "records " << records.size() << ", passed " << passed << ", errors " << errors << ", runtime "
         << std::fixed << std::setprecision(2) << meta.runtime_seconds << " s, sampler rejection rate "
         << std::setprecision(3) << (total_points ? double(meta.stats.rejected) / total_points : 0.0) << '\n';
    if (errors) return kDomain;
    return passed == int(records.size()) ? kPass : kFail;
}

// ---- report --------------------------------------------------------------

int cmd_report(const std::vector<std::string>& files, const std::string& format, const std::string& out,
               const std::string& merged) {
    std::vector<ResidualRecord> records;
    for (const auto& path : files) {
        auto parsed = read_report_file(path);
        for (auto& r : parsed.records) records.push_back(std::move(r));
    }
    if (!merged.empty()) {
        std::ofstream m(merged);
        if (!m) throw ConfigError("--merged: cannot write '" + merged + "'");
        ReportMeta meta;
        meta.timestamp = utc_timestamp();
        RunConfig rc;
        rc.settings.cases.clear();
        write_json_lines(m, rc, records, meta);
    }
    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw ConfigError("--out: cannot write '" + out + "'");
    }
    std::ostream& os = out.empty() ? std::cout : file;
    if (format == "csv") write_csv(os, records);
    else write_text(os, records);
    for (const auto& r : records)
        if (!r.pass) return kFail;
    return kPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kvd: Koornwinder-van Diejen operators, eigenfunctions and identity checks"};
    app.require_subcommand(1);

    ModelFlags eval_flags;
    auto* eval = app.add_subcommand("eval", "tabulate s, theta, G, c, coefficients, constants or psi^2");
    eval_flags.attach(eval);
    std::string what = "s", alpha, tau, constant;
    std::vector<std::string> xs;
    int J = 0, sign = 1;
    eval->add_option("--what", what, "s | theta | gamma | c | V | V0 | E | psi2");
    eval->add_option("--x", xs, "point; coordinates separated by commas, e.g. 0.3+0.1i,0.5");
    eval->add_option("--alpha", alpha, "gamma period (default beta)");
    eval->add_option("--tau", tau, "theta modulus (default the case IV tau)");
    eval->add_option("--J", J, "coordinate of the shift coefficient");
    eval->add_option("--sign", sign, "shift direction +1 or -1")->check(CLI::IsMember({1, -1}));
    eval->add_option("--constant", constant, "source | c0 | E_N | C_NM | Ct_NMt | E_NNt | C_NNtMMt");

    ModelFlags verify_flags;
    auto* verify = app.add_subcommand("verify", "check identities on seeded samples");
    verify_flags.attach(verify);
    std::string config_path, cases;
    std::vector<std::string> identities;
    bool all = false, no_balance = false;
    int samples = 0, jobs = 1, max_n = 3;
    std::uint64_t seed = 1;
    double tol = 0;
    verify->add_option("--config", config_path, "JSON run configuration; flags override it");
    verify->add_option("--cases", cases, "comma-separated cases");
    verify->add_option("--identity", identities, "identity names, comma-separated or repeated");
    verify->add_flag("--all", all, "every identity");
    verify->add_option("--samples", samples, "points per variant");
    verify->add_option("--seed", seed);
    verify->add_option("--tol", tol, "tolerance override")->check(CLI::PositiveNumber);
    verify->add_flag("--no-balance", no_balance, "case IV: run only the unbalanced negative controls");
    verify->add_option("--jobs", jobs)->check(CLI::Range(1, 256));
    verify->add_option("--max-n", max_n, "largest particle count")->check(CLI::Range(0, 3));

    auto* report = app.add_subcommand("report", "merge reports; summary matrix or CSV");
    std::vector<std::string> files;
    std::string report_format = "text", report_out, merged;
    report->add_option("files", files, "JSON-lines reports")->required();
    report->add_option("--format", report_format)->check(CLI::IsMember({"text", "csv"}));
    report->add_option("--out", report_out);
    report->add_option("--merged", merged, "write the merged records as a JSON-lines report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (eval->parsed())
            return cmd_eval(eval, eval_flags, what, xs, alpha, tau, J, sign, constant);
        if (verify->parsed())
            return cmd_verify(verify, verify_flags, config_path, cases, identities, all, samples, seed, tol,
                              no_balance, jobs, max_n);
        if (report->parsed()) return cmd_report(files, report_format, report_out, merged);
    } catch (const ReportError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const DomainError& e) {
        std::cerr << "numerical-domain error: " << e.what() << '\n';
        return kDomain;
    }
    return kConfig;
}
