#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gridsafe/env/reward.hpp"
#include "gridsafe/error.hpp"

namespace gridsafe {

/// Weights of the composite evaluation indicator (episode-level rates, not
/// the per-step training cost).
struct MetricWeights {
  double overload = 0.9;
  double violation = 0.1;
};

struct EpisodeMetrics {
  int survival_step = 0;
  double cumulative_reward = 0.0;
  double overload_rate = 0.0;    // % of steps with C_l > 0
  double violation_rate = 0.0;   // % of steps with C_v > 0
  double safety_cost_metric = 0.0;
  friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

inline double safety_cost_metric(double overload_rate, double violation_rate, MetricWeights w = {}) {
  return w.overload * overload_rate + w.violation * violation_rate;
}

/// Metrics of one episode trace (one entry per executed transition).
inline EpisodeMetrics compute_metrics(std::span<const StepSignal> trace, MetricWeights w = {}) {
  if (trace.empty()) throw UsageError("compute_metrics: empty trace");
  EpisodeMetrics m;
  std::size_t over = 0, viol = 0;
  for (const auto& s : trace) {
    m.cumulative_reward += s.reward;
    if (s.overload_fraction > 0) ++over;
    if (s.voltage_fraction > 0) ++viol;
  }
  const double n = static_cast<double>(trace.size());
  m.survival_step = static_cast<int>(trace.size());
  m.overload_rate = 100.0 * static_cast<double>(over) / n;
  m.violation_rate = 100.0 * static_cast<double>(viol) / n;
  m.safety_cost_metric = safety_cost_metric(m.overload_rate, m.violation_rate, w);
  return m;
}

}  // namespace gridsafe
