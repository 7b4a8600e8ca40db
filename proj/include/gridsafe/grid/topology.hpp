#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "gridsafe/grid/case.hpp"

namespace gridsafe {

/// Busbar assignment, line connectivity and cooldowns. Vectors are indexed
/// by the flat element index of GridCase (lines by line index).
struct TopologyState {
  std::vector<std::uint8_t> element_busbar;  // 0 or 1
  std::vector<std::uint8_t> line_status;     // 1 = connected
  std::vector<int> cooldowns;                // remaining steps, >= 0

  static TopologyState base(const GridCase& c) {
    TopologyState t;
    t.element_busbar.assign(c.element_count(), 0);
    t.line_status.assign(c.line_count(), 1);
    t.cooldowns.assign(c.element_count(), 0);
    return t;
  }

  friend bool operator==(const TopologyState&, const TopologyState&) = default;
};

struct GraphNode {
  std::size_t substation;
  int busbar;
};

struct GraphEdge {
  std::size_t line;
  std::size_t from_node;
  std::size_t to_node;
};

/// Electrical node graph after busbar splitting.
struct EffectiveGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::vector<int> element_node;  // flat element -> node index
  std::vector<int> island;        // node -> island label, labels 0..island_count-1
  int island_count = 0;
  int slack_node = -1;

  int node_of(std::size_t substation, int busbar) const {
    for (std::size_t n = 0; n < nodes.size(); ++n)
      if (nodes[n].substation == substation && nodes[n].busbar == busbar) return static_cast<int>(n);
    return -1;
  }
};

/// One node per (substation, busbar) carrying at least one element, in
/// substation-then-busbar order; disconnected lines contribute no edge.
inline EffectiveGraph build_effective_graph(const GridCase& c, const TopologyState& topo) {
  EffectiveGraph g;
  const std::size_t n_sub = c.substations.size();
  std::vector<std::array<bool, 2>> used(n_sub, {false, false});
  for (std::size_t e = 0; e < c.element_count(); ++e)
    used[c.element_substation(e)][topo.element_busbar[e] ? 1 : 0] = true;

  std::vector<std::array<int, 2>> index(n_sub, {-1, -1});
  for (std::size_t s = 0; s < n_sub; ++s)
    for (int bb = 0; bb < 2; ++bb)
      if (used[s][bb]) {
        index[s][bb] = static_cast<int>(g.nodes.size());
        g.nodes.push_back({s, bb});
      }

  g.element_node.resize(c.element_count());
  for (std::size_t e = 0; e < c.element_count(); ++e)
    g.element_node[e] = index[c.element_substation(e)][topo.element_busbar[e] ? 1 : 0];

  const std::size_t m = c.line_count();
  for (std::size_t j = 0; j < m; ++j) {
    if (!topo.line_status[j]) continue;
    g.edges.push_back({j, static_cast<std::size_t>(g.element_node[j]),
                       static_cast<std::size_t>(g.element_node[m + j])});
  }

  // union-find over edges
  std::vector<std::size_t> parent(g.nodes.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& e : g.edges) {
    const std::size_t a = find(e.from_node), b = find(e.to_node);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  g.island.assign(g.nodes.size(), -1);
  std::vector<int> label(g.nodes.size(), -1);
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    const std::size_t r = find(n);
    if (label[r] < 0) label[r] = g.island_count++;
    g.island[n] = label[r];
  }

  // Slack node: the slack substation's node hosting its first generator,
  // otherwise its lowest busbar node.
  const std::size_t slack_sub = c.slack_substation();
  for (std::size_t k = 0; k < c.generators.size() && g.slack_node < 0; ++k)
    if (c.generators[k].substation == slack_sub)
      g.slack_node = g.element_node[c.element_index({ElementKind::generator, k})];
  if (g.slack_node < 0) g.slack_node = index[slack_sub][0] >= 0 ? index[slack_sub][0] : index[slack_sub][1];
  return g;
}

}  // namespace gridsafe
