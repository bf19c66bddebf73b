#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "kvd/errors.hpp"
#include "kvd/verify.hpp"

namespace kvd {

// Everything a verify run needs, as read from a config file and flags.
struct RunConfig {
    VerifySettings settings;
    std::string out;                  // empty: standard output
    std::string format = "text";      // text | json-lines | csv

    bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const RunConfig& config);
// Fields absent from `j` keep their value in `base`. Throws ConfigError naming the field.
RunConfig run_config_from_json(const nlohmann::json& j, const RunConfig& base = {});
RunConfig load_run_config(const std::string& path, const RunConfig& base = {});

// JSON text with every floating-point number printed as %.17g; non-finite values become null.
std::string dump_json(const nlohmann::json& j);

nlohmann::json to_json(const ResidualRecord& r);
ResidualRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ResidualReport& r);

// Header (timestamp, runtime: excluded from comparisons), one line per record, summary footer.
struct ReportMeta {
    std::string timestamp;
    double runtime_seconds = 0;
    SampleStats stats;
};

void write_json_lines(std::ostream& os, const RunConfig& config, const std::vector<ResidualRecord>& records,
                      const ReportMeta& meta);
void write_csv(std::ostream& os, const std::vector<ResidualRecord>& records);
// Per-variant table followed by the identity x case matrix.
void write_text(std::ostream& os, const std::vector<ResidualRecord>& records);

// Records from a JSON-lines report. Throws ReportError naming the record index.
class ReportError : public Error {
public:
    using Error::Error;
};

struct ParsedReport {
    nlohmann::json header;
    std::vector<ResidualRecord> records;
};

ParsedReport read_json_lines(std::istream& is, const std::string& source);
ParsedReport read_report_file(const std::string& path);

// The report text without its header line: the part that must be identical across repeat runs.
std::string report_payload(const std::string& report_text);

// identity x case: passing records / all records, worst residual, and a mark when all pass.
struct MatrixCell {
    int passed = 0;
    int total = 0;
    double worst = 0;  // largest residual among non-control records
};

void write_summary_matrix(std::ostream& os, const std::vector<ResidualRecord>& records);

}  // namespace kvd
