#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcit/ccco_test.hpp"
#include "fcit/dataset.hpp"
#include "fcit/rng.hpp"

namespace fcit {

/// Random error curve eps(t) = sum_k xi_k min(t, anchors_k): standard
/// normal coefficients against Brownian-motion kernel sections at uniform
/// anchor times. Continuous with eps(0) = 0.
struct ErrorProcess {
  std::vector<double> xi;
  std::vector<double> anchors;

  double operator()(double t) const {
    double sum = 0.0;
    for (size_t k = 0; k < xi.size(); ++k) {
      sum += xi[k] * std::min(t, anchors[k]);
    }
    return sum;
  }
};

/// Draws r normal coefficients followed by r uniform anchors from rng.
ErrorProcess gen_error(int r, Rng& rng);

enum class Schedule { balanced, unbalanced };

struct SimulationSpec {
  int model_id = 1;  // 1..5
  int n = 100;
  Schedule schedule = Schedule::balanced;
  int m = 50;         // balanced: grid j/m, j=0..m; unbalanced: m draws + t=0
  int pool_size = 0;  // unbalanced sampling pool {j/pool}; 0 -> 10*m
  int reps = 100;
  std::uint64_t seed = 12345;
  int error_rank = 50;  // r terms per error process
};

/// The three error processes of one subject (Z, X and Y components).
struct SubjectProcesses {
  ErrorProcess e1, e2, e3;
};

/// Error processes for every subject of one replication, drawn from the
/// channel streams stream_key(seed, rep_index, channel) in subject order.
std::vector<SubjectProcesses> rep_processes(const SimulationSpec& spec,
                                            int rep_index);

/// Observation times for one replication: the shared balanced grid, or a
/// per-subject draw of m points (plus t = 0) from the unbalanced pool.
std::vector<std::vector<double>> rep_times(const SimulationSpec& spec,
                                           int rep_index);

/// One simulated dataset: Z = e1, X = 2 Z + e2, and Y per model
///   1: Z + e3          2: Z + X^2 + e3       3: Z + X + e3
///   4: Z + 4 log(|X|+1) + e3                 5: Z X + e3
/// evaluated at the replication's observation times.
TripleDataset gen_dataset(const SimulationSpec& spec, int rep_index);

struct RepRecord {
  int rep = 0;
  double statistic = 0.0;
  double p_value = 1.0;
  double delta_star = 0.0;
  double epsilon_star = 0.0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

/// Runs the pipeline once per replication. Failures are recorded in the
/// corresponding row without aborting the sweep; rows are ordered by
/// rep_index regardless of scheduling.
std::vector<RepRecord> run_experiment(const SimulationSpec& spec,
                                      const PipelineConfig& config);

/// Fraction of successful replications with p <= level.
double rejection_rate(const std::vector<RepRecord>& records,
                      double level = 0.05);

}  // namespace fcit
