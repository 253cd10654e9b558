#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fcit/ccco_test.hpp"
#include "fcit/dataset.hpp"

namespace fcit {

enum class CsvFormat { long_csv, wide_csv };

struct IngestResult {
  TripleDataset data;
  int total_subjects = 0;    // distinct subject ids seen in the file
  int dropped_subjects = 0;  // incomplete channel or unparseable value
  bool rescaled_time = false;
};

/// Reads a dataset. long_csv: header subject_id,channel,time,value with
/// one observation per row. wide_csv: header subject_id,channel,t0,t1,...
/// with the shared grid as column names (balanced layout). Subjects with
/// a missing channel or an unreadable value are dropped and counted;
/// structurally malformed rows raise parse_error with the line number.
/// Times outside [0, 1] are mapped affinely onto [0, 1] over the whole
/// dataset.
IngestResult ingest(const std::string& path, CsvFormat format);
IngestResult ingest_stream(std::istream& in, CsvFormat format,
                           const std::string& origin);

/// Writes a dataset in the long format; re-ingesting reproduces the
/// times and values exactly.
void export_long_csv(const TripleDataset& data, const std::string& path);

/// Shortest decimal form that round-trips the double exactly.
std::string format_double(double v);

/// key = value configuration file covering every PipelineConfig field.
PipelineConfig parse_config(std::istream& in, const std::string& origin);
PipelineConfig load_config(const std::string& path);
void write_config(const PipelineConfig& config, std::ostream& out,
                  const std::string& line_prefix = "");

const char* balanced_mode_name(BalancedMode mode);
const char* pvalue_method_name(PvalueMethod method);

struct StageTimings {
  double ingest_ms = 0.0;
  double test_ms = 0.0;
  double total_ms = 0.0;
};

/// Run report: result, tuning, input summary, resolved configuration and
/// timings as stable key = value lines. Stripping the "config." prefix
/// from those lines yields a loadable configuration file; timing.* lines
/// are the only nondeterministic content.
void write_report(std::ostream& out, const TestResult& result,
                  const PipelineConfig& config, const IngestResult& input,
                  const StageTimings& timings);

}  // namespace fcit
