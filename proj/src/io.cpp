#include "fcit/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace fcit {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    const size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

bool parse_double(const std::string& token, double* out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (begin != end && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, *out);
  return res.ec == std::errc() && res.ptr == end && !token.empty();
}

bool parse_int64(const std::string& token, long long* out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (begin != end && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, *out);
  return res.ec == std::errc() && res.ptr == end && !token.empty();
}

bool is_missing_token(const std::string& token) {
  if (token.empty()) return true;
  static const char* tokens[] = {"NA", "na", "Na", "NaN", "nan",
                                 "NULL", "null", "."};
  for (const char* t : tokens) {
    if (token == t) return true;
  }
  return false;
}

[[noreturn]] void fail_line(const std::string& origin, long line,
                            const std::string& what) {
  throw parse_error(origin + ":" + std::to_string(line) + ": " + what);
}

int channel_index(const std::string& token) {
  if (token == "X") return 0;
  if (token == "Y") return 1;
  if (token == "Z") return 2;
  return -1;
}

struct RawSubject {
  std::array<std::vector<std::pair<double, double>>, 3> obs;
  bool damaged = false;  // missing or unparseable value seen
};

IngestResult assemble(std::map<std::string, RawSubject>& raw,
                      const std::string& origin) {
  IngestResult result;
  result.total_subjects = static_cast<int>(raw.size());

  for (auto& [id, subject] : raw) {
    bool complete = !subject.damaged;
    for (auto& channel : subject.obs) {
      if (channel.empty()) complete = false;
    }
    if (!complete) {
      ++result.dropped_subjects;
      continue;
    }
    result.data.subject_ids.push_back(id);
    for (int c = 0; c < 3; ++c) {
      auto& channel = subject.obs[static_cast<size_t>(c)];
      std::sort(channel.begin(), channel.end());
      FunctionalSample sample;
      sample.subject_id = id;
      sample.times.reserve(channel.size());
      sample.values.reserve(channel.size());
      for (auto& [t, v] : channel) {
        sample.times.push_back(t);
        sample.values.push_back(v);
      }
      result.data.channels[static_cast<size_t>(c)].push_back(
          std::move(sample));
    }
  }

  if (result.data.subject_ids.empty()) {
    throw degenerate_data_error(origin + ": no complete subjects after ingestion");
  }

  // Map times onto [0, 1] when the raw axis extends beyond it; one affine
  // map for the whole dataset so subjects stay aligned.
  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -std::numeric_limits<double>::infinity();
  for (const auto& channel : result.data.channels) {
    for (const auto& sample : channel) {
      t_min = std::min(t_min, sample.times.front());
      t_max = std::max(t_max, sample.times.back());
    }
  }
  if (t_min < 0.0 || t_max > 1.0) {
    result.rescaled_time = true;
    const double span = t_max - t_min;
    for (auto& channel : result.data.channels) {
      for (auto& sample : channel) {
        for (double& t : sample.times) {
          t = span > 0.0 ? (t - t_min) / span : 0.0;
        }
        if (!sample.times.empty()) {
          sample.times.front() = std::max(sample.times.front(), 0.0);
          sample.times.back() = std::min(sample.times.back(), 1.0);
        }
      }
    }
  }

  result.data.validate();
  return result;
}

IngestResult ingest_long(std::istream& in, const std::string& origin) {
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) {
    throw parse_error(origin + ": empty file, expected a header row");
  }
  ++line_no;
  const std::vector<std::string> header = split(line, ',');
  if (header.size() != 4) {
    fail_line(origin, line_no, "expected 4 header columns");
  }
  int col_subject = -1, col_channel = -1, col_time = -1, col_value = -1;
  for (int c = 0; c < 4; ++c) {
    const std::string& name = header[static_cast<size_t>(c)];
    if (name == "subject_id") col_subject = c;
    else if (name == "channel") col_channel = c;
    else if (name == "time") col_time = c;
    else if (name == "value") col_value = c;
  }
  if (col_subject < 0 || col_channel < 0 || col_time < 0 || col_value < 0) {
    fail_line(origin, line_no,
              "header must name subject_id, channel, time, value");
  }

  std::map<std::string, RawSubject> raw;
  std::map<std::string, std::map<std::pair<int, double>, long>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != 4) {
      fail_line(origin, line_no, "expected 4 fields");
    }
    const std::string& id = fields[static_cast<size_t>(col_subject)];
    if (id.empty()) fail_line(origin, line_no, "empty subject_id");
    const int channel =
        channel_index(fields[static_cast<size_t>(col_channel)]);
    if (channel < 0) {
      fail_line(origin, line_no, "channel must be one of X, Y, Z");
    }
    double t = 0.0;
    if (!parse_double(fields[static_cast<size_t>(col_time)], &t) ||
        !std::isfinite(t)) {
      fail_line(origin, line_no, "unreadable time value");
    }
    auto [it, inserted] =
        seen[id].emplace(std::make_pair(channel, t), line_no);
    if (!inserted) {
      fail_line(origin, line_no,
                "duplicate (subject, channel, time) record, first seen at line " +
                    std::to_string(it->second));
    }

    RawSubject& subject = raw[id];
    double v = 0.0;
    const std::string& value_token = fields[static_cast<size_t>(col_value)];
    if (is_missing_token(value_token) || !parse_double(value_token, &v) ||
        !std::isfinite(v)) {
      subject.damaged = true;
      continue;
    }
    subject.obs[static_cast<size_t>(channel)].emplace_back(t, v);
  }
  return assemble(raw, origin);
}

IngestResult ingest_wide(std::istream& in, const std::string& origin) {
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) {
    throw parse_error(origin + ": empty file, expected a header row");
  }
  ++line_no;
  const std::vector<std::string> header = split(line, ',');
  if (header.size() < 3 || header[0] != "subject_id" ||
      header[1] != "channel") {
    fail_line(origin, line_no,
              "wide header must start with subject_id, channel followed by "
              "time columns");
  }
  std::vector<double> grid;
  grid.reserve(header.size() - 2);
  for (size_t c = 2; c < header.size(); ++c) {
    double t = 0.0;
    if (!parse_double(header[c], &t) || !std::isfinite(t)) {
      fail_line(origin, line_no, "time column '" + header[c] +
                                     "' is not numeric");
    }
    if (!grid.empty() && t <= grid.back()) {
      fail_line(origin, line_no, "time columns must be strictly increasing");
    }
    grid.push_back(t);
  }

  std::map<std::string, RawSubject> raw;
  std::map<std::string, std::array<long, 3>> seen_rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != header.size()) {
      fail_line(origin, line_no, "expected " + std::to_string(header.size()) +
                                     " fields");
    }
    const std::string& id = fields[0];
    if (id.empty()) fail_line(origin, line_no, "empty subject_id");
    const int channel = channel_index(fields[1]);
    if (channel < 0) {
      fail_line(origin, line_no, "channel must be one of X, Y, Z");
    }
    auto& rows = seen_rows.emplace(id, std::array<long, 3>{0, 0, 0})
                     .first->second;
    if (rows[static_cast<size_t>(channel)] != 0) {
      fail_line(origin, line_no, "duplicate row for subject '" + id +
                                     "' channel " + fields[1]);
    }
    rows[static_cast<size_t>(channel)] = line_no;

    RawSubject& subject = raw[id];
    auto& obs = subject.obs[static_cast<size_t>(channel)];
    obs.reserve(grid.size());
    for (size_t c = 0; c < grid.size(); ++c) {
      double v = 0.0;
      const std::string& token = fields[c + 2];
      if (is_missing_token(token) || !parse_double(token, &v) ||
          !std::isfinite(v)) {
        subject.damaged = true;
        obs.clear();
        break;
      }
      obs.emplace_back(grid[c], v);
    }
  }
  return assemble(raw, origin);
}

}  // namespace

IngestResult ingest_stream(std::istream& in, CsvFormat format,
                           const std::string& origin) {
  return format == CsvFormat::long_csv ? ingest_long(in, origin)
                                       : ingest_wide(in, origin);
}

IngestResult ingest(const std::string& path, CsvFormat format) {
  std::ifstream in(path);
  if (!in) {
    throw io_error("cannot open input file: " + path);
  }
  return ingest_stream(in, format, path);
}

void export_long_csv(const TripleDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw io_error("cannot open output file: " + path);
  }
  out << "subject_id,channel,time,value\n";
  for (size_t i = 0; i < data.subject_ids.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const FunctionalSample& sample =
          data.channels[static_cast<size_t>(c)][i];
      for (size_t j = 0; j < sample.times.size(); ++j) {
        out << sample.subject_id << ','
            << channel_name(static_cast<Channel>(c)) << ','
            << format_double(sample.times[j]) << ','
            << format_double(sample.values[j]) << '\n';
      }
    }
  }
  if (!out) {
    throw io_error("failed writing " + path);
  }
}

std::string format_double(double v) {
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v || (std::isnan(back) && std::isnan(v))) break;
  }
  return buf;
}

const char* balanced_mode_name(BalancedMode mode) {
  switch (mode) {
    case BalancedMode::auto_detect: return "auto";
    case BalancedMode::balanced: return "balanced";
    default: return "unbalanced";
  }
}

const char* pvalue_method_name(PvalueMethod method) {
  return method == PvalueMethod::monte_carlo ? "mc" : "satterthwaite";
}

namespace {

std::string join_grid(const std::vector<double>& grid) {
  if (grid.empty()) return "default";
  std::string out;
  for (size_t i = 0; i < grid.size(); ++i) {
    if (i) out += ',';
    out += format_double(grid[i]);
  }
  return out;
}

std::vector<double> parse_grid(const std::string& value,
                               const std::string& origin, long line_no) {
  if (value == "default") return {};
  std::vector<double> grid;
  for (const std::string& token : split(value, ',')) {
    double v = 0.0;
    if (!parse_double(token, &v) || !(v > 0.0)) {
      fail_line(origin, line_no, "grid entries must be positive numbers");
    }
    grid.push_back(v);
  }
  return grid;
}

}  // namespace

PipelineConfig parse_config(std::istream& in, const std::string& origin) {
  PipelineConfig config;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const size_t eq = text.find('=');
    if (eq == std::string::npos) {
      fail_line(origin, line_no, "expected 'key = value'");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    long long integer = 0;
    double real = 0.0;
    if (key == "balanced") {
      if (value == "auto") config.balanced = BalancedMode::auto_detect;
      else if (value == "balanced") config.balanced = BalancedMode::balanced;
      else if (value == "unbalanced")
        config.balanced = BalancedMode::unbalanced;
      else fail_line(origin, line_no, "balanced must be auto|balanced|unbalanced");
    } else if (key == "grid_l") {
      if (!parse_int64(value, &integer) || integer < 2) {
        fail_line(origin, line_no, "grid_l must be an integer >= 2");
      }
      config.grid_l = static_cast<int>(integer);
    } else if (key == "i_t") {
      config.delta_grid = parse_grid(value, origin, line_no);
    } else if (key == "i_z") {
      config.epsilon_grid = parse_grid(value, origin, line_no);
    } else if (key == "draws") {
      if (!parse_int64(value, &integer) || integer < 1000) {
        fail_line(origin, line_no, "draws must be an integer >= 1000");
      }
      config.draws = integer;
    } else if (key == "seed") {
      if (!parse_int64(value, &integer) || integer < 0) {
        fail_line(origin, line_no, "seed must be a nonnegative integer");
      }
      config.seed = static_cast<std::uint64_t>(integer);
    } else if (key == "eigen_tol") {
      if (!parse_double(value, &real) || !(real >= 0.0)) {
        fail_line(origin, line_no, "eigen_tol must be nonnegative");
      }
      config.eigen_rel_tol = real;
    } else if (key == "method") {
      if (value == "mc") config.method = PvalueMethod::monte_carlo;
      else if (value == "satterthwaite")
        config.method = PvalueMethod::satterthwaite;
      else fail_line(origin, line_no, "method must be mc|satterthwaite");
    } else if (key == "threads") {
      if (!parse_int64(value, &integer) || integer < 1) {
        fail_line(origin, line_no, "threads must be a positive integer");
      }
      config.threads = static_cast<int>(integer);
    } else {
      fail_line(origin, line_no, "unknown configuration key '" + key + "'");
    }
  }
  return config;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw io_error("cannot open config file: " + path);
  }
  return parse_config(in, path);
}

void write_config(const PipelineConfig& config, std::ostream& out,
                  const std::string& line_prefix) {
  out << line_prefix << "balanced = " << balanced_mode_name(config.balanced)
      << '\n';
  out << line_prefix << "grid_l = " << config.grid_l << '\n';
  out << line_prefix << "i_t = " << join_grid(config.delta_grid) << '\n';
  out << line_prefix << "i_z = " << join_grid(config.epsilon_grid) << '\n';
  out << line_prefix << "draws = " << config.draws << '\n';
  out << line_prefix << "seed = " << config.seed << '\n';
  out << line_prefix << "eigen_tol = " << format_double(config.eigen_rel_tol)
      << '\n';
  out << line_prefix << "method = " << pvalue_method_name(config.method)
      << '\n';
  out << line_prefix << "threads = " << config.threads << '\n';
}

void write_report(std::ostream& out, const TestResult& result,
                  const PipelineConfig& config, const IngestResult& input,
                  const StageTimings& timings) {
  out << "fcit.version = 0.1.0\n";
  out << "result.statistic = " << format_double(result.statistic) << '\n';
  out << "result.p_value = " << format_double(result.p_value) << '\n';
  out << "result.n = " << result.n << '\n';
  out << "result.eigenvalue_count = " << result.eigenvalues.size() << '\n';
  out << "result.eigenvalues_head = ";
  const Eigen::Index head = std::min<Eigen::Index>(10, result.eigenvalues.size());
  for (Eigen::Index k = 0; k < head; ++k) {
    if (k) out << ',';
    out << format_double(result.eigenvalues(k));
  }
  out << '\n';
  out << "tuning.gamma_t = " << format_double(result.tuning.gamma_t) << '\n';
  out << "tuning.gamma_x = " << format_double(result.tuning.gamma_x) << '\n';
  out << "tuning.gamma_y = " << format_double(result.tuning.gamma_y) << '\n';
  out << "tuning.gamma_z = " << format_double(result.tuning.gamma_z) << '\n';
  out << "tuning.delta_star = " << format_double(result.tuning.delta_star)
      << '\n';
  out << "tuning.epsilon_star = " << format_double(result.tuning.epsilon_star)
      << '\n';
  for (const auto& [key, value] : result.diagnostics) {
    out << "diag." << key << " = " << format_double(value) << '\n';
  }
  out << "input.subjects_total = " << input.total_subjects << '\n';
  out << "input.subjects_dropped = " << input.dropped_subjects << '\n';
  out << "input.time_rescaled = " << (input.rescaled_time ? 1 : 0) << '\n';
  for (int c = 0; c < 3; ++c) {
    size_t m_min = std::numeric_limits<size_t>::max();
    size_t m_max = 0;
    for (const auto& sample : input.data.channels[static_cast<size_t>(c)]) {
      m_min = std::min(m_min, sample.times.size());
      m_max = std::max(m_max, sample.times.size());
    }
    if (m_max == 0) m_min = 0;
    const char* name = channel_name(static_cast<Channel>(c));
    out << "input.m_min_" << name << " = " << m_min << '\n';
    out << "input.m_max_" << name << " = " << m_max << '\n';
  }
  write_config(config, out, "config.");
  out << "timing.ingest_ms = " << format_double(timings.ingest_ms) << '\n';
  out << "timing.test_ms = " << format_double(timings.test_ms) << '\n';
  out << "timing.total_ms = " << format_double(timings.total_ms) << '\n';
}

}  // namespace fcit
