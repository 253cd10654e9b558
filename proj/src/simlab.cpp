#include "fcit/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <thread>

namespace fcit {

namespace {

// Stream ids appended to (seed, rep_index): 0..2 are the error-process
// channels, 3 the observation schedule, 4 the Monte Carlo p-value.
constexpr std::uint64_t kStreamSchedule = 3;
constexpr std::uint64_t kStreamPvalue = 4;

void validate_spec(const SimulationSpec& spec) {
  if (spec.model_id < 1 || spec.model_id > 5) {
    throw std::invalid_argument("simulation: model_id must be in 1..5");
  }
  if (spec.n < 3) {
    throw std::invalid_argument("simulation: need n >= 3 subjects");
  }
  if (spec.m < 2) {
    throw std::invalid_argument("simulation: need m >= 2 observation points");
  }
  if (spec.error_rank < 1) {
    throw std::invalid_argument("simulation: error_rank must be >= 1");
  }
  if (spec.schedule == Schedule::unbalanced) {
    const int pool = spec.pool_size > 0 ? spec.pool_size : 10 * spec.m;
    if (pool < spec.m) {
      throw std::invalid_argument("simulation: pool_size must be >= m");
    }
  }
}

std::string subject_label(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%06d", i);
  return buf;
}

double model_y(int model_id, double z, double x, double e3) {
  switch (model_id) {
    case 1: return z + e3;
    case 2: return z + x * x + e3;
    case 3: return z + x + e3;
    case 4: return z + 4.0 * std::log(std::abs(x) + 1.0) + e3;
    default: return z * x + e3;  // model 5
  }
}

}  // namespace

ErrorProcess gen_error(int r, Rng& rng) {
  if (r < 1) {
    throw std::invalid_argument("gen_error: r must be >= 1");
  }
  ErrorProcess e;
  e.xi.resize(static_cast<size_t>(r));
  e.anchors.resize(static_cast<size_t>(r));
  for (double& v : e.xi) v = rng.normal();
  for (double& a : e.anchors) a = rng.uniform(0.0, 1.0);
  return e;
}

std::vector<SubjectProcesses> rep_processes(const SimulationSpec& spec,
                                            int rep_index) {
  validate_spec(spec);
  if (rep_index < 0 || rep_index >= spec.reps) {
    throw std::invalid_argument("rep_processes: rep_index out of range");
  }

  Rng rng1(stream_key(spec.seed, static_cast<std::uint64_t>(rep_index), 0));
  Rng rng2(stream_key(spec.seed, static_cast<std::uint64_t>(rep_index), 1));
  Rng rng3(stream_key(spec.seed, static_cast<std::uint64_t>(rep_index), 2));

  std::vector<SubjectProcesses> out;
  out.reserve(static_cast<size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    SubjectProcesses sp;
    sp.e1 = gen_error(spec.error_rank, rng1);
    sp.e2 = gen_error(spec.error_rank, rng2);
    sp.e3 = gen_error(spec.error_rank, rng3);
    out.push_back(std::move(sp));
  }
  return out;
}

std::vector<std::vector<double>> rep_times(const SimulationSpec& spec,
                                           int rep_index) {
  validate_spec(spec);
  if (rep_index < 0 || rep_index >= spec.reps) {
    throw std::invalid_argument("rep_times: rep_index out of range");
  }

  std::vector<std::vector<double>> out(static_cast<size_t>(spec.n));
  if (spec.schedule == Schedule::balanced) {
    std::vector<double> grid(static_cast<size_t>(spec.m) + 1);
    for (int j = 0; j <= spec.m; ++j) {
      grid[static_cast<size_t>(j)] =
          static_cast<double>(j) / static_cast<double>(spec.m);
    }
    for (auto& t : out) t = grid;
    return out;
  }

  const int pool = spec.pool_size > 0 ? spec.pool_size : 10 * spec.m;
  Rng rng(stream_key(spec.seed, static_cast<std::uint64_t>(rep_index),
                     kStreamSchedule));
  std::vector<int> indices(static_cast<size_t>(pool));
  for (auto& times : out) {
    // Partial Fisher-Yates: the first m slots become the sample.
    std::iota(indices.begin(), indices.end(), 1);
    for (int k = 0; k < spec.m; ++k) {
      const auto j = k + static_cast<int>(rng.bounded(
                             static_cast<std::uint64_t>(pool - k)));
      std::swap(indices[static_cast<size_t>(k)],
                indices[static_cast<size_t>(j)]);
    }
    times.resize(static_cast<size_t>(spec.m) + 1);
    times[0] = 0.0;
    for (int k = 0; k < spec.m; ++k) {
      times[static_cast<size_t>(k) + 1] =
          static_cast<double>(indices[static_cast<size_t>(k)]) /
          static_cast<double>(pool);
    }
    std::sort(times.begin(), times.end());
  }
  return out;
}

TripleDataset gen_dataset(const SimulationSpec& spec, int rep_index) {
  const std::vector<SubjectProcesses> processes =
      rep_processes(spec, rep_index);
  const std::vector<std::vector<double>> times = rep_times(spec, rep_index);

  TripleDataset data;
  data.subject_ids.reserve(static_cast<size_t>(spec.n));
  for (auto& channel : data.channels) {
    channel.reserve(static_cast<size_t>(spec.n));
  }

  for (int i = 0; i < spec.n; ++i) {
    const auto& sp = processes[static_cast<size_t>(i)];
    const auto& t_i = times[static_cast<size_t>(i)];
    const std::string id = subject_label(i);
    data.subject_ids.push_back(id);

    FunctionalSample fx{id, t_i, {}};
    FunctionalSample fy{id, t_i, {}};
    FunctionalSample fz{id, t_i, {}};
    fx.values.reserve(t_i.size());
    fy.values.reserve(t_i.size());
    fz.values.reserve(t_i.size());
    for (double t : t_i) {
      const double z = sp.e1(t);
      const double x = 2.0 * z + sp.e2(t);
      fz.values.push_back(z);
      fx.values.push_back(x);
      fy.values.push_back(model_y(spec.model_id, z, x, sp.e3(t)));
    }
    data.channels[0].push_back(std::move(fx));
    data.channels[1].push_back(std::move(fy));
    data.channels[2].push_back(std::move(fz));
  }
  return data;
}

std::vector<RepRecord> run_experiment(const SimulationSpec& spec,
                                      const PipelineConfig& config) {
  validate_spec(spec);
  if (spec.reps < 0) {
    throw std::invalid_argument("run_experiment: reps must be >= 0");
  }
  std::vector<RepRecord> records(static_cast<size_t>(spec.reps));

  auto work = [&](int rep) {
    RepRecord rec;
    rec.rep = rep;
    try {
      const TripleDataset data = gen_dataset(spec, rep);
      PipelineConfig rep_config = config;
      rep_config.seed = stream_key(config.seed,
                                   static_cast<std::uint64_t>(rep),
                                   kStreamPvalue);
      const TestResult result = run_test(data, rep_config);
      rec.statistic = result.statistic;
      rec.p_value = result.p_value;
      rec.delta_star = result.tuning.delta_star;
      rec.epsilon_star = result.tuning.epsilon_star;
    } catch (const std::exception& e) {
      rec.statistic = std::numeric_limits<double>::quiet_NaN();
      rec.p_value = std::numeric_limits<double>::quiet_NaN();
      rec.delta_star = std::numeric_limits<double>::quiet_NaN();
      rec.epsilon_star = std::numeric_limits<double>::quiet_NaN();
      rec.error = e.what();
    }
    records[static_cast<size_t>(rep)] = std::move(rec);
  };

  const int workers = std::max(1, config.threads);
  if (workers == 1 || spec.reps <= 1) {
    for (int rep = 0; rep < spec.reps; ++rep) work(rep);
    return records;
  }

  // Replications are independent and each derives its own streams, so
  // any scheduling yields the same records.
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int count = std::min(workers, spec.reps);
  pool.reserve(static_cast<size_t>(count));
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int rep = next.fetch_add(1);
        if (rep >= spec.reps) return;
        work(rep);
      }
    });
  }
  for (auto& t : pool) t.join();
  return records;
}

double rejection_rate(const std::vector<RepRecord>& records, double level) {
  int ok = 0;
  int rejected = 0;
  for (const auto& rec : records) {
    if (!rec.ok()) continue;
    ++ok;
    if (rec.p_value <= level) ++rejected;
  }
  if (ok == 0) return 0.0;
  return static_cast<double>(rejected) / static_cast<double>(ok);
}

}  // namespace fcit
