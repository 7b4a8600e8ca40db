#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gridsafe/error.hpp"

namespace gridsafe {

/// Load/generation efficiency term plus quadratic tracking penalty.
///
/// `bus_load` and `bus_generation` are aligned per bus. Buses with positive
/// generation contribute (local load)/(local generation); the demand of the
/// remaining buses is pooled into one system ratio (sum L)/(sum P). The
/// tracking penalty sums (P - P_ref)^2 over generators. All powers in p.u.,
/// `step_hours` is the step duration.
inline double compute_reward(std::span<const double> bus_load, std::span<const double> bus_generation,
                             std::span<const double> dispatch, std::span<const double> reference,
                             double penalty, double step_hours) {
  double ratio = 0.0, pooled_load = 0.0, total_gen = 0.0;
  for (std::size_t b = 0; b < bus_load.size(); ++b) {
    if (bus_generation[b] > 0) {
      ratio += bus_load[b] / bus_generation[b];
      total_gen += bus_generation[b];
    } else {
      pooled_load += bus_load[b];
    }
  }
  if (pooled_load > 0 && total_gen > 0) ratio += pooled_load / total_gen;
  double tracking = 0.0;
  for (std::size_t g = 0; g < dispatch.size(); ++g) {
    const double d = dispatch[g] - reference[g];
    tracking += d * d;
  }
  return -ratio - penalty * step_hours * tracking;
}

/// C_t = alpha_v * C_v + alpha_l * C_l
inline double compute_safety_cost(double voltage_fraction, double overload_fraction, double alpha_v,
                                  double alpha_l) {
  return alpha_v * voltage_fraction + alpha_l * overload_fraction;
}

struct TrajectoryObjectives {
  double operational;  // J_op = -sum r_t
  double safety;       // J_safe = mean C_t
  double scalarized;   // J = J_op + kappa * J_safe
};

struct StepSignal {
  double reward;
  double voltage_fraction;
  double overload_fraction;
};

inline TrajectoryObjectives trajectory_objectives(std::span<const StepSignal> steps, double alpha_v,
                                                  double alpha_l, double kappa) {
  if (steps.empty()) throw UsageError("trajectory_objectives: empty trajectory");
  double reward = 0.0, cost = 0.0;
  for (const auto& s : steps) {
    reward += s.reward;
    cost += compute_safety_cost(s.voltage_fraction, s.overload_fraction, alpha_v, alpha_l);
  }
  TrajectoryObjectives j;
  j.operational = -reward;
  j.safety = cost / static_cast<double>(steps.size());
  j.scalarized = j.operational + kappa * j.safety;
  return j;
}

}  // namespace gridsafe
