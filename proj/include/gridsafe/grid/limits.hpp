#pragma once

#include <cstddef>
#include <vector>

#include "gridsafe/grid/case.hpp"
#include "gridsafe/grid/power_flow.hpp"

namespace gridsafe {

struct BusViolation {
  std::size_t bus;
  double voltage;  // the worst offending node voltage at this bus
  friend bool operator==(const BusViolation&, const BusViolation&) = default;
};

struct LineOverload {
  std::size_t line;
  double usage_percent;
  friend bool operator==(const LineOverload&, const LineOverload&) = default;
};

struct LimitReport {
  double voltage_violation_fraction = 0.0;  // C_v
  double overload_fraction = 0.0;           // C_l
  std::vector<BusViolation> violating_buses;
  std::vector<LineOverload> overloaded_lines;

  friend bool operator==(const LimitReport&, const LimitReport&) = default;
};

/// Loading ratio I / I_max per line.
inline std::vector<double> line_loading(const GridCase& c, const PowerFlowSolution& sol) {
  std::vector<double> rho(c.line_count());
  for (std::size_t j = 0; j < c.line_count(); ++j) rho[j] = sol.line_current[j] / c.lines[j].i_max;
  return rho;
}

/// A bus violates when any energized node of its substation lies strictly
/// outside [v_min, v_max]; a line is overloaded when its current strictly
/// exceeds i_max.
inline LimitReport evaluate_limits(const GridCase& c, const PowerFlowSolution& sol) {
  LimitReport rep;
  const std::size_t n_bus = c.bus_count();
  std::vector<int> worst(n_bus, -1);
  auto excess = [&](std::size_t bus, double v) {
    const Bus& b = c.buses[bus];
    return v < b.v_min ? b.v_min - v : v - b.v_max;
  };
  for (std::size_t k = 0; k < sol.voltage_magnitude.size(); ++k) {
    if (!sol.energized[k]) continue;
    const std::size_t bus = c.substations[sol.node_substation[k]].bus;
    const double v = sol.voltage_magnitude[k];
    if (!(v < c.buses[bus].v_min || v > c.buses[bus].v_max)) continue;
    if (worst[bus] < 0 || excess(bus, v) > excess(bus, sol.voltage_magnitude[worst[bus]]))
      worst[bus] = static_cast<int>(k);
  }
  for (std::size_t bus = 0; bus < n_bus; ++bus)
    if (worst[bus] >= 0) rep.violating_buses.push_back({bus, sol.voltage_magnitude[worst[bus]]});
  for (std::size_t j = 0; j < c.line_count(); ++j)
    if (sol.line_current[j] > c.lines[j].i_max)
      rep.overloaded_lines.push_back({j, 100.0 * sol.line_current[j] / c.lines[j].i_max});
  rep.voltage_violation_fraction =
      static_cast<double>(rep.violating_buses.size()) / static_cast<double>(n_bus);
  rep.overload_fraction = c.line_count() == 0 ? 0.0
                                              : static_cast<double>(rep.overloaded_lines.size()) /
                                                    static_cast<double>(c.line_count());
  return rep;
}

}  // namespace gridsafe
