// Command-line front end: smooth, tune, test, simulate.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fcit/ccco_test.hpp"
#include "fcit/io.hpp"
#include "fcit/simlab.hpp"

namespace {

// Exit codes, one per error class.
enum ExitCode {
  kOk = 0,
  kUsage = 1,
  kIoError = 2,
  kParseError = 3,
  kDataError = 4,
  kNumericalError = 5,
  kTuningError = 6,
  kInternalError = 7,
};

struct CommonOptions {
  std::string input;
  std::string format = "long_csv";
  std::string config_path;
  std::string output;
  std::string balanced_flag;  // "", "balanced", "unbalanced"
  int grid_l = -1;
  long long seed = -1;
  long long draws = -1;
  std::string method;
  int threads = -1;
};

void add_config_flags(CLI::App* cmd, CommonOptions* opt, bool needs_input) {
  if (needs_input) {
    cmd->add_option("--input", opt->input, "Input CSV file")->required();
    cmd->add_option("--format", opt->format, "Input layout")
        ->check(CLI::IsMember({"long_csv", "wide_csv"}));
  }
  cmd->add_option("--config", opt->config_path, "key = value configuration file");
  cmd->add_option("--output", opt->output, "Output file (default: stdout)");
  auto* bal = cmd->add_flag_callback(
      "--balanced", [opt]() { opt->balanced_flag = "balanced"; },
      "Force the shared-grid quadrature shortcut");
  cmd->add_flag_callback(
         "--unbalanced", [opt]() { opt->balanced_flag = "unbalanced"; },
         "Force the smoothing route")
      ->excludes(bal);
  cmd->add_option("--grid-l", opt->grid_l,
                  "Integration grid intervals (even)");
  cmd->add_option("--seed", opt->seed, "RNG seed");
  cmd->add_option("--draws", opt->draws, "Monte Carlo draws for the p-value");
  cmd->add_option("--method", opt->method, "P-value method")
      ->check(CLI::IsMember({"mc", "satterthwaite"}));
  cmd->add_option("--threads", opt->threads, "Replication workers (simulate)");
}

fcit::PipelineConfig resolve_config(const CommonOptions& opt) {
  fcit::PipelineConfig config;
  if (!opt.config_path.empty()) {
    config = fcit::load_config(opt.config_path);
  }
  if (opt.balanced_flag == "balanced") {
    config.balanced = fcit::BalancedMode::balanced;
  } else if (opt.balanced_flag == "unbalanced") {
    config.balanced = fcit::BalancedMode::unbalanced;
  }
  if (opt.grid_l >= 0) {
    if (opt.grid_l < 2 || opt.grid_l % 2 != 0) {
      throw std::invalid_argument("--grid-l must be an even integer >= 2");
    }
    config.grid_l = opt.grid_l;
  }
  if (opt.seed >= 0) config.seed = static_cast<std::uint64_t>(opt.seed);
  if (opt.draws >= 0) {
    if (opt.draws < 1000) {
      throw std::invalid_argument("--draws must be >= 1000");
    }
    config.draws = opt.draws;
  }
  if (opt.method == "mc") config.method = fcit::PvalueMethod::monte_carlo;
  else if (opt.method == "satterthwaite")
    config.method = fcit::PvalueMethod::satterthwaite;
  if (opt.threads >= 1) config.threads = opt.threads;
  return config;
}

fcit::CsvFormat parse_format(const std::string& name) {
  return name == "wide_csv" ? fcit::CsvFormat::wide_csv
                            : fcit::CsvFormat::long_csv;
}

// Writes to the output path, or stdout when none was given.
void deliver(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw fcit::io_error("cannot open output file: " + path);
  }
  out << content;
  if (!out) {
    throw fcit::io_error("failed writing " + path);
  }
}

std::string sanitize_cell(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

int cmd_test(const CommonOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  fcit::PipelineConfig config = resolve_config(opt);
  const fcit::IngestResult input = fcit::ingest(opt.input, parse_format(opt.format));
  const auto t1 = std::chrono::steady_clock::now();
  const fcit::TestResult result = fcit::run_test(input.data, config);
  const auto t2 = std::chrono::steady_clock::now();
  fcit::StageTimings timings;
  timings.ingest_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  timings.test_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
  timings.total_ms = std::chrono::duration<double, std::milli>(t2 - t0).count();

  // Echo the fully resolved configuration so a rerun from the echo
  // reproduces this report byte for byte (timing lines aside).
  fcit::PipelineConfig echo = config;
  echo.balanced = result.diagnostics.at("balanced") > 0.5
                      ? fcit::BalancedMode::balanced
                      : fcit::BalancedMode::unbalanced;
  if (echo.delta_grid.empty()) echo.delta_grid = fcit::default_tuning_ladder();
  echo.epsilon_grid = fcit::resolve_epsilon_grid(config, result.n);

  std::ostringstream report;
  fcit::write_report(report, result, echo, input, timings);
  deliver(opt.output, report.str());
  return kOk;
}

int cmd_smooth(const CommonOptions& opt) {
  fcit::PipelineConfig config = resolve_config(opt);
  config.balanced = fcit::BalancedMode::unbalanced;  // always reconstruct
  const fcit::IngestResult input = fcit::ingest(opt.input, parse_format(opt.format));
  const fcit::FunctionGeometry fg = fcit::function_geometry(input.data, config);

  std::ostringstream out;
  out << "# gamma_t = " << fcit::format_double(fg.gamma_t) << '\n';
  out << "# delta_star = " << fcit::format_double(fg.delta_star) << '\n';
  out << "subject_id,channel,time,value\n";
  const std::vector<double> grid(fg.rule.grid.data(),
                                 fg.rule.grid.data() + fg.rule.grid.size());
  for (size_t i = 0; i < input.data.subject_ids.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const Eigen::VectorXd values =
          fcit::eval_curve(fg.curves[static_cast<size_t>(c)][i], grid);
      for (size_t j = 0; j < grid.size(); ++j) {
        out << input.data.subject_ids[i] << ','
            << fcit::channel_name(static_cast<fcit::Channel>(c)) << ','
            << fcit::format_double(grid[j]) << ','
            << fcit::format_double(values(static_cast<Eigen::Index>(j)))
            << '\n';
      }
    }
  }
  deliver(opt.output, out.str());
  return kOk;
}

int cmd_tune(const CommonOptions& opt) {
  fcit::PipelineConfig config = resolve_config(opt);
  const fcit::IngestResult input = fcit::ingest(opt.input, parse_format(opt.format));
  const fcit::FunctionGeometry fg = fcit::function_geometry(input.data, config);
  const fcit::SecondLayer sl = fcit::second_layer(fg.inner_products);
  const std::vector<double> i_z =
      fcit::resolve_epsilon_grid(config, input.data.n());
  const fcit::GcvResult gcv_z =
      fcit::gcv_epsilon(sl.raw[0], sl.raw[1], sl.k_z_c, i_z);

  std::ostringstream out;
  out << "param,candidate,score,selected\n";
  for (size_t i = 0; i < fg.delta_grid.size(); ++i) {
    out << "delta," << fcit::format_double(fg.delta_grid[i]) << ','
        << fcit::format_double(fg.delta_scores[i]) << ','
        << (fg.delta_grid[i] == fg.delta_star ? 1 : 0) << '\n';
  }
  for (size_t i = 0; i < i_z.size(); ++i) {
    out << "epsilon," << fcit::format_double(i_z[i]) << ','
        << fcit::format_double(gcv_z.scores[i]) << ','
        << (i_z[i] == gcv_z.selected ? 1 : 0) << '\n';
  }
  deliver(opt.output, out.str());
  return kOk;
}

int cmd_simulate(const CommonOptions& opt, const fcit::SimulationSpec& spec_in) {
  fcit::PipelineConfig config = resolve_config(opt);
  fcit::SimulationSpec spec = spec_in;
  spec.seed = config.seed;

  const std::vector<fcit::RepRecord> records =
      fcit::run_experiment(spec, config);

  std::ostringstream out;
  const char* schedule_name =
      spec.schedule == fcit::Schedule::balanced ? "balanced" : "unbalanced";
  out << "rep,model,n,schedule,statistic,p_value,delta_star,epsilon_star,status\n";
  int failures = 0;
  for (const auto& rec : records) {
    out << rec.rep << ',' << spec.model_id << ',' << spec.n << ','
        << schedule_name << ',' << fcit::format_double(rec.statistic) << ','
        << fcit::format_double(rec.p_value) << ','
        << fcit::format_double(rec.delta_star) << ','
        << fcit::format_double(rec.epsilon_star) << ','
        << (rec.ok() ? "ok" : sanitize_cell(rec.error)) << '\n';
    if (!rec.ok()) ++failures;
  }
  out << "# rejection_rate_0.05 = "
      << fcit::format_double(fcit::rejection_rate(records, 0.05)) << '\n';
  out << "# failures = " << failures << '\n';
  deliver(opt.output, out.str());
  return kOk;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Conditional independence testing for functional data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  CommonOptions test_opt, smooth_opt, tune_opt, sim_opt;

  auto* test_cmd = app.add_subcommand(
      "test", "Run the conditional independence test on a dataset");
  add_config_flags(test_cmd, &test_opt, true);

  auto* smooth_cmd = app.add_subcommand(
      "smooth", "Reconstruct curves on the integration grid");
  add_config_flags(smooth_cmd, &smooth_opt, true);

  auto* tune_cmd = app.add_subcommand(
      "tune", "Report the GCV score tables for both regularizers");
  add_config_flags(tune_cmd, &tune_opt, true);

  auto* sim_cmd = app.add_subcommand(
      "simulate", "Replicated experiments on the built-in models");
  fcit::SimulationSpec spec;
  std::string schedule = "balanced";
  sim_cmd->add_option("--model", spec.model_id, "Model id (1..5)")
      ->required()
      ->check(CLI::Range(1, 5));
  sim_cmd->add_option("--n", spec.n, "Subjects per replication")->required();
  sim_cmd->add_option("--m", spec.m, "Observation points per subject");
  sim_cmd->add_option("--reps", spec.reps, "Number of replications")
      ->required();
  sim_cmd->add_option("--schedule", schedule, "Observation schedule")
      ->check(CLI::IsMember({"balanced", "unbalanced"}));
  sim_cmd->add_option("--pool-size", spec.pool_size,
                      "Unbalanced sampling pool size (default 10*m)");
  sim_cmd->add_option("--error-rank", spec.error_rank,
                      "Terms in each random error curve");
  add_config_flags(sim_cmd, &sim_opt, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (test_cmd->parsed()) return cmd_test(test_opt);
    if (smooth_cmd->parsed()) return cmd_smooth(smooth_opt);
    if (tune_cmd->parsed()) return cmd_tune(tune_opt);
    spec.schedule = schedule == "unbalanced" ? fcit::Schedule::unbalanced
                                             : fcit::Schedule::balanced;
    return cmd_simulate(sim_opt, spec);
  } catch (const std::invalid_argument& e) {
    std::cerr << "fcit: " << e.what() << '\n';
    return kUsage;
  } catch (const fcit::io_error& e) {
    std::cerr << "fcit: " << e.what() << '\n';
    return kIoError;
  } catch (const fcit::parse_error& e) {
    std::cerr << "fcit: " << e.what() << '\n';
    return kParseError;
  } catch (const fcit::degenerate_data_error& e) {
    std::cerr << "fcit: " << e.what() << '\n';
    return kDataError;
  } catch (const fcit::tuning_error& e) {
    std::cerr << "fcit: " << e.what() << '\n';
    return kTuningError;
  } catch (const fcit::numerical_error& e) {
    std::cerr << "fcit: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "fcit: internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace

int main(int argc, char** argv) { return dispatch(argc, argv); }
