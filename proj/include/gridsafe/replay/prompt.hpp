#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "gridsafe/env/environment.hpp"
#include "gridsafe/grid/topology.hpp"
#include "gridsafe/replay/buffer.hpp"
#include "gridsafe/replay/proposal.hpp"

namespace gridsafe {

inline const char* severity_label(double usage_percent) {
  return usage_percent > 120.0 ? "severe" : "moderate";
}

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string join(const std::vector<std::string>& v, const char* sep = ", ") {
  if (v.empty()) return "none";
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
  return out;
}

struct NodeVoltage {
  std::size_t substation;
  int busbar;
  double v;
};

inline std::vector<NodeVoltage> node_voltages(const GridCase& c, const GridState& s) {
  std::vector<NodeVoltage> out;
  if (s.failed()) return out;
  const EffectiveGraph g = build_effective_graph(c, s.topology);
  for (std::size_t n = 0; n < g.nodes.size(); ++n)
    if (s.solution.energized[n]) out.push_back({g.nodes[n].substation, g.nodes[n].busbar, s.solution.voltage_magnitude[n]});
  return out;
}

inline std::string node_name(const GridCase& c, const NodeVoltage& n) {
  return c.substations[n.substation].id + (n.busbar ? "b" : "");
}

}  // namespace detail

/// Renders a transition as an advisor prompt describing its pre-action state.
inline std::string build_prompt(const Transition& tr, const GridCase& c, const RefinementConfig& cfg) {
  using detail::fmt;
  using detail::join;
  const GridState& s = tr.state;
  std::string out;
  out += "You are assisting a transmission system operator. Your task is to relieve line overloads and keep "
         "node voltages inside their band using busbar reassignments.\n\n";
  out += "Current situation at step " + std::to_string(s.t) + ". Work through it step by step.\n\n";

  std::vector<std::string> operable;
  for (const auto& sub : c.substations)
    if (sub.controllable) operable.push_back(sub.id);
  out += "1. Grid overview\n";
  out += "  - Total elements: " + std::to_string(c.element_count()) + "\n";
  out += "  - Operable substations: " + join(operable) + "\n";
  out += "  - Total lines: " + std::to_string(c.line_count()) + "\n";
  out += "  - Voltage normal range: " + fmt("%.2f", cfg.v_low) + "-" + fmt("%.2f", cfg.v_high) + " pu\n\n";

  std::vector<std::size_t> order;
  std::vector<double> usage(c.line_count(), 0.0);
  if (!s.failed()) {
    const auto rho = line_loading(c, s.solution);
    for (std::size_t j = 0; j < c.line_count(); ++j) {
      usage[j] = 100.0 * rho[j];
      if (usage[j] > cfg.overload_threshold) order.push_back(j);
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return usage[a] > usage[b]; });
  if (order.size() > cfg.top_k) order.resize(cfg.top_k);

  out += "2. Top-" + std::to_string(cfg.top_k) + " overloaded lines (threshold: " + fmt("%g", cfg.overload_threshold) +
         "%)\n";
  if (order.empty()) out += "  none\n";
  std::set<std::size_t> crucial;
  for (std::size_t j : order) {
    const Line& l = c.lines[j];
    crucial.insert(l.from);
    crucial.insert(l.to);
    out += "  - Line " + l.id + " (" + fmt("%.1f", usage[j]) + "%, " + severity_label(usage[j]) + ")\n";
    out += "    Connection: Sub " + c.substations[l.from].id + " <-> Sub " + c.substations[l.to].id + "\n";
    out += "    Active power flow: " + fmt("%.2f", s.solution.line_flow_p[j]) + " MW\n";
  }
  out += "\n";

  const auto nodes = detail::node_voltages(c, s);
  std::vector<std::string> under, over;
  for (const auto& n : nodes) {
    const std::string item = "Node " + detail::node_name(c, n) + ": " + fmt("%.4f", n.v) + " pu";
    if (n.v < cfg.v_low) under.push_back(item), crucial.insert(n.substation);
    if (n.v > cfg.v_high) over.push_back(item), crucial.insert(n.substation);
  }
  out += "3. Voltage abnormalities\n";
  out += "  Under-voltage nodes (<" + fmt("%.2f", cfg.v_low) + " pu): " + join(under) + "\n";
  out += "  Over-voltage nodes (>" + fmt("%.2f", cfg.v_high) + " pu): " + join(over) + "\n\n";

  out += "4. Crucial substations (overload / voltage-related)\n";
  if (crucial.empty()) out += "  none\n";
  for (std::size_t sub : crucial) {
    std::vector<std::string> bus0, bus1, off, volts;
    for (std::size_t j = 0; j < c.line_count(); ++j) {
      const Line& l = c.lines[j];
      if (l.from != sub && l.to != sub) continue;
      if (!s.topology.line_status[j]) {
        off.push_back(l.id);
        continue;
      }
      const ElementKind end = l.from == sub ? ElementKind::line_origin : ElementKind::line_extremity;
      (s.topology.element_busbar[c.element_index({end, j})] ? bus1 : bus0).push_back(l.id);
    }
    for (const auto& n : nodes)
      if (n.substation == sub) volts.push_back(detail::node_name(c, n) + ": " + fmt("%.4f", n.v) + " pu");
    out += "  Sub " + c.substations[sub].id + "\n";
    out += "  - Bus 0 lines: " + join(bus0) + "\n";
    out += "  - Bus 1 lines: " + join(bus1) + "\n";
    out += "  - Disconnected lines: " + join(off) + "\n";
    out += "  - Voltage nodes: " + join(volts) + "\n";
  }
  out += "\n";

  std::string impact;
  if (tr.next_state.failed()) {
    impact = "grid failure (" + std::string(to_string(tr.next_state.terminal_reason)) + ")";
  } else if (nodes.empty()) {
    impact = "unknown";
  } else {
    const auto after = detail::node_voltages(c, tr.next_state);
    auto range = [](const std::vector<detail::NodeVoltage>& v) {
      double lo = 1e9, hi = -1e9;
      for (const auto& n : v) lo = std::min(lo, n.v), hi = std::max(hi, n.v);
      return std::pair{lo, hi};
    };
    const auto [lo0, hi0] = range(nodes);
    const auto [lo1, hi1] = range(after);
    impact = "min voltage " + fmt("%.4f", lo0) + " -> " + fmt("%.4f", lo1) + " pu, max voltage " + fmt("%.4f", hi0) +
             " -> " + fmt("%.4f", hi1) + " pu";
  }
  out += "5. Bad action examples (RL-derived)\n";
  out += "  - Avoid: " + describe_action(c, tr.action) + "\n";
  out += "  - Reward: " + fmt("%g", tr.reward) + "\n";
  out += "  - Voltage impact: " + impact + "\n\n";

  std::vector<std::string> cd_lines, cd_steps;
  for (std::size_t j = 0; j < c.line_count(); ++j) {
    const int cd = std::max(s.topology.cooldowns[c.element_index({ElementKind::line_origin, j})],
                            s.topology.cooldowns[c.element_index({ElementKind::line_extremity, j})]);
    if (cd > 0) cd_lines.push_back(c.lines[j].id), cd_steps.push_back(std::to_string(cd));
  }
  out += "6. Operational constraints\n";
  out += "  - Lines in cooldown: " + join(cd_lines) + "\n";
  out += "  - Remaining steps: " + join(cd_steps) + "\n\n";

  out += "Answer in this format:\n";
  out += "1. [Critical issues]\n";
  out += "2. [Current topology]\n";
  out += "3. [Why the listed action was bad]\n";
  out += "4. Proposed line changes (bus_id must be 0 or 1), all at one substation, written as\n";
  out += "   {line_id: new_bus_id, ...}\n\n";
  out += std::string(proposal_marker);
  return out;
}

}  // namespace gridsafe
