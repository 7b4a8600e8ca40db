#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gridsafe/env/environment.hpp"
#include "gridsafe/error.hpp"
#include "gridsafe/eval/metrics.hpp"

namespace gridsafe {

struct EpisodeRow {
  std::string label;
  std::uint64_t seed = 0;
  std::size_t episode = 0;
  std::size_t offset = 0;
  EpisodeMetrics metrics;
  friend bool operator==(const EpisodeRow&, const EpisodeRow&) = default;
};

struct RunReport {
  std::vector<EpisodeRow> rows;
  std::size_t skipped = 0;  // episodes whose start point had no solution
  std::string fingerprint;
  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Per-field summary across episodes.
struct MetricSummary {
  double survival_step = 0.0;
  double cumulative_reward = 0.0;
  double overload_rate = 0.0;
  double violation_rate = 0.0;
  double safety_cost_metric = 0.0;
};

struct ReportAggregate {
  MetricSummary mean, stddev;  // population standard deviation
};

inline ReportAggregate aggregate(const RunReport& r) {
  ReportAggregate a;
  if (r.rows.empty()) return a;
  const double n = static_cast<double>(r.rows.size());
  auto field = [&](auto get, double& mean, double& sd) {
    double s = 0.0;
    for (const auto& row : r.rows) s += get(row.metrics);
    mean = s / n;
    double v = 0.0;
    for (const auto& row : r.rows) v += (get(row.metrics) - mean) * (get(row.metrics) - mean);
    sd = std::sqrt(v / n);
  };
  field([](const EpisodeMetrics& m) { return static_cast<double>(m.survival_step); }, a.mean.survival_step,
        a.stddev.survival_step);
  field([](const EpisodeMetrics& m) { return m.cumulative_reward; }, a.mean.cumulative_reward,
        a.stddev.cumulative_reward);
  field([](const EpisodeMetrics& m) { return m.overload_rate; }, a.mean.overload_rate, a.stddev.overload_rate);
  field([](const EpisodeMetrics& m) { return m.violation_rate; }, a.mean.violation_rate, a.stddev.violation_rate);
  field([](const EpisodeMetrics& m) { return m.safety_cost_metric; }, a.mean.safety_cost_metric,
        a.stddev.safety_cost_metric);
  return a;
}

using Policy = std::function<Action(const GridState&)>;

struct RolloutOptions {
  std::size_t episodes = 1;
  std::uint64_t seed = 0;
  std::size_t stride = 288;  // candidate start rows are multiples of this
  std::string label = "eval";
  MetricWeights weights;
};

/// Start rows whose full episode fits into the chronics.
inline std::vector<std::size_t> episode_offsets(const Environment& env, std::size_t stride) {
  std::vector<std::size_t> out;
  const std::size_t rows = env.chronics().rows();
  const auto len = static_cast<std::size_t>(env.config().max_episode_length);
  for (std::size_t o = 0; o + len < rows; o += std::max<std::size_t>(stride, 1)) out.push_back(o);
  if (out.empty() && rows > 1) out.push_back(0);
  return out;
}

/// Per-step signals of one episode from `offset` until termination.
inline std::vector<StepSignal> run_episode(const Environment& env, const Policy& policy, std::size_t offset) {
  std::vector<StepSignal> trace;
  GridState s = env.reset(offset);
  while (!s.terminal) {
    Transition t = env.step(s, policy(s));
    trace.push_back({t.reward, t.voltage_fraction, t.overload_fraction});
    s = std::move(t.next_state);
  }
  return trace;
}

/// Seeded episodes; each starts at a start row drawn from episode_offsets.
inline RunReport rollout(const Environment& env, const Policy& policy, const RolloutOptions& opt) {
  if (opt.episodes == 0) throw UsageError("rollout: episodes must be >= 1");
  const auto offsets = episode_offsets(env, opt.stride);
  if (offsets.empty()) throw UsageError("rollout: chronics too short for one episode");
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, offsets.size() - 1);
  RunReport r;
  for (std::size_t e = 0; e < opt.episodes; ++e) {
    const std::size_t offset = offsets[pick(rng)];
    std::vector<StepSignal> trace;
    try {
      trace = run_episode(env, policy, offset);
    } catch (const NumericError&) {
      ++r.skipped;
      continue;
    }
    if (trace.empty()) {
      ++r.skipped;
      continue;
    }
    r.rows.push_back({opt.label, opt.seed, e, offset, compute_metrics(trace, opt.weights)});
  }
  return r;
}

}  // namespace gridsafe
