#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace gridsafe;
using namespace gridsafe::testing;

namespace {

double total_loss(const PowerFlowSolution& s) {
  double l = 0.0;
  for (double x : s.line_loss_p) l += x;
  return l;
}

double total_injection(const PowerFlowSolution& s) {
  double p = 0.0;
  for (std::size_t k = 0; k < s.node_p.size(); ++k)
    if (s.energized[k]) p += s.node_p[k];
  return p;
}

}  // namespace

TEST(Case, LoadsBundledFixtures) {
  const GridCase five = load_case(fixtures::five_bus_case());
  EXPECT_EQ(five.bus_count(), 5u);
  EXPECT_EQ(five.line_count(), 6u);
  EXPECT_EQ(five.element_count(), 2 * 6u + 2 + 3);
  const GridCase fourteen = load_case(fixtures::fourteen_bus_case());
  EXPECT_EQ(fourteen.bus_count(), 14u);
  EXPECT_EQ(fourteen.line_count(), 20u);
}

TEST(Case, DumpRoundTrips) {
  const GridCase a = load_case(fixtures::five_bus_case());
  const GridCase b = load_case(dump_case(a));
  EXPECT_EQ(dump_case(a), dump_case(b));
}

TEST(Case, RejectsMalformedInput) {
  EXPECT_THROW(load_case("{"), ParseError);
  EXPECT_THROW(load_case("{}"), ParseError);
  std::string bad = fixtures::two_bus_case();
  bad.replace(bad.find("\"x\": 0.1"), 8, "\"x\": 0.0");
  EXPECT_THROW(load_case(bad), Error);
}

TEST(Graph, BaseTopologyHasOneNodePerSubstation) {
  const GridCase c = load_case(fixtures::five_bus_case());
  const EffectiveGraph g = build_effective_graph(c, TopologyState::base(c));
  EXPECT_EQ(g.nodes.size(), c.substations.size());
  EXPECT_EQ(g.edges.size(), c.line_count());
  EXPECT_EQ(g.island_count, 1);
}

TEST(Graph, SplitSubstationContributesTwoNodes) {
  const GridCase c = load_case(fixtures::five_bus_case());
  TopologyState t = TopologyState::base(c);
  t.element_busbar[c.element_index({ElementKind::line_extremity, 2})] = 1;  // line 2 end at substation 2
  const EffectiveGraph g = build_effective_graph(c, t);
  EXPECT_EQ(g.nodes.size(), c.substations.size() + 1);
  EXPECT_GE(g.node_of(2, 0), 0);
  EXPECT_GE(g.node_of(2, 1), 0);
}

TEST(Graph, AllLinesDisconnectedIsolatesEveryNode) {
  const GridCase c = load_case(fixtures::five_bus_case());
  TopologyState t = TopologyState::base(c);
  std::fill(t.line_status.begin(), t.line_status.end(), 0);
  const EffectiveGraph g = build_effective_graph(c, t);
  EXPECT_EQ(g.nodes.size(), c.substations.size());
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(g.island_count, static_cast<int>(c.substations.size()));
}

TEST(Graph, SoundOnRandomTopologies) {
  const GridCase c = load_case(fixtures::fourteen_bus_case());
  const EffectiveGraph base = build_effective_graph(c, TopologyState::base(c));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> bit(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    TopologyState t = TopologyState::base(c);
    for (auto& b : t.element_busbar) b = static_cast<std::uint8_t>(bit(rng));
    for (auto& s : t.line_status) s = static_cast<std::uint8_t>(bit(rng) || bit(rng));
    const EffectiveGraph g = build_effective_graph(c, t);
    for (const auto& e : g.edges) {
      ASSERT_LT(e.from_node, g.nodes.size());
      ASSERT_LT(e.to_node, g.nodes.size());
      ASSERT_EQ(g.island[e.from_node], g.island[e.to_node]);
    }
    for (std::size_t e = 0; e < c.element_count(); ++e) {
      const auto& n = g.nodes[static_cast<std::size_t>(g.element_node[e])];
      ASSERT_EQ(n.substation, c.element_substation(e));
      ASSERT_EQ(n.busbar, t.element_busbar[e]);
    }
    TopologyState merged = t;
    std::fill(merged.element_busbar.begin(), merged.element_busbar.end(), 0);
    std::fill(merged.line_status.begin(), merged.line_status.end(), 1);
    const EffectiveGraph m = build_effective_graph(c, merged);
    ASSERT_EQ(m.nodes.size(), base.nodes.size());
    ASSERT_EQ(m.edges.size(), base.edges.size());
    for (std::size_t k = 0; k < m.edges.size(); ++k) {
      ASSERT_EQ(m.edges[k].line, base.edges[k].line);
      ASSERT_EQ(m.edges[k].from_node, base.edges[k].from_node);
      ASSERT_EQ(m.edges[k].to_node, base.edges[k].to_node);
    }
  }
}

TEST(PowerFlow, ZeroInjectionIsFlat) {
  const GridCase c = load_case(fixtures::two_bus_case());
  const EffectiveGraph g = build_effective_graph(c, TopologyState::base(c));
  const std::vector<NodeInjection> inj(g.nodes.size());
  const PowerFlowSolution s = solve_power_flow(c, g, inj);
  ASSERT_TRUE(s.converged());
  EXPECT_EQ(s.iterations, 1);
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    EXPECT_DOUBLE_EQ(s.voltage_magnitude[k], 1.0);
    EXPECT_DOUBLE_EQ(s.voltage_angle[k], 0.0);
  }
  EXPECT_DOUBLE_EQ(s.line_flow_p[0], 0.0);
}

TEST(PowerFlow, TwoBusMatchesClosedForm) {
  for (double mw : {10.0, 50.0, 120.0, 300.0, 480.0}) {
    const Environment env = env_from(fixtures::two_bus_case(), two_bus_chronics(mw));
    const GridState s = env.reset(0);
    const auto oracle = two_bus_oracle(1.0, 0.1, mw / 100.0);
    ASSERT_TRUE(oracle.has_value()) << mw;
    EXPECT_NEAR(s.solution.voltage_magnitude[0], 1.0, 1e-12);
    EXPECT_LT(std::abs(s.solution.voltage_magnitude[1] - oracle->v2), 1e-8) << mw;
    EXPECT_LT(std::abs(s.solution.voltage_angle[1] - oracle->theta2), 1e-8) << mw;
  }
}

TEST(PowerFlow, TwoBusBeyondTransferLimitDiverges) {
  // p x > v1^2 / 2 has no real solution
  EXPECT_FALSE(two_bus_oracle(1.0, 0.1, 5.5).has_value());
  const Environment env = env_from(fixtures::two_bus_case(), two_bus_chronics(550.0));
  EXPECT_THROW(env.reset(0), NumericError);
}

TEST(PowerFlow, FixturesConvergeAndBalance) {
  const Environment five = five_bus_env();
  for (std::size_t row : {0u, 100u, 200u, 250u, 1000u}) {
    const GridState s = five.reset(row);
    ASSERT_TRUE(s.solution.converged());
    EXPECT_LT(s.solution.mismatch_norm, 1e-8);
    EXPECT_LE(s.solution.iterations, 20);
    EXPECT_NEAR(total_injection(s.solution), total_loss(s.solution), 1e-7);
  }
  const Environment fourteen = fourteen_bus_env();
  const GridState s = fourteen.reset(0);
  ASSERT_TRUE(s.solution.converged());
  EXPECT_LT(s.solution.mismatch_norm, 1e-8);
  EXPECT_LE(s.solution.iterations, 20);
  EXPECT_NEAR(total_injection(s.solution), total_loss(s.solution), 1e-7);
}

TEST(PowerFlow, GenerationEqualsLoadPlusLosses) {
  const Environment env = five_bus_env();
  const auto& ch = env.chronics();
  for (std::size_t row : {0u, 210u, 777u}) {
    const GridState s = env.reset(row);
    double gen = 0.0, load = 0.0;
    for (double d : s.dispatch) gen += d;
    for (double l : ch.load_p[row]) load += l / env.grid().base_mva;
    EXPECT_NEAR(gen, load + total_loss(s.solution), 1e-7);
  }
}

TEST(PowerFlow, BalancedOnRandomSplits) {
  const Environment env = five_bus_env();
  const ActionSpace space(env.grid());
  const GridState s0 = env.reset(40);
  for (std::size_t i = 0; i < space.size(); ++i) {
    const Transition t = env.step(s0, space[i]);
    if (t.next_state.failed()) continue;
    EXPECT_NEAR(total_injection(t.next_state.solution), total_loss(t.next_state.solution), 1e-7) << i;
  }
}

TEST(PowerFlow, Deterministic) {
  const GridCase c = load_case(fixtures::fourteen_bus_case());
  const Environment env = fourteen_bus_env();
  const GridState a = env.reset(0), b = env.reset(0);
  EXPECT_EQ(a.solution, b.solution);
}

TEST(Limits, VoltageExample) {
  // four buses, limits [0.95, 1.05]
  const char* json = R"({"name": "four", "base_mva": 100,
    "buses": [{"id": "1"}, {"id": "2"}, {"id": "3"}, {"id": "4"}],
    "substations": [{"id": "0", "bus": "1"}, {"id": "1", "bus": "2"}, {"id": "2", "bus": "3"}, {"id": "3", "bus": "4"}],
    "lines": [{"id": "0", "from": "0", "to": "1", "r": 0, "x": 0.1, "i_max": 1},
              {"id": "1", "from": "1", "to": "2", "r": 0, "x": 0.1, "i_max": 1},
              {"id": "2", "from": "2", "to": "3", "r": 0, "x": 0.1, "i_max": 1}],
    "generators": [{"id": "0", "substation": "0", "p_max": 100}],
    "loads": [], "slack": "1"})";
  const GridCase c = load_case(json);
  PowerFlowSolution s;
  s.voltage_magnitude = {1.0, 1.08, 0.92, 1.12};
  s.voltage_angle.assign(4, 0.0);
  s.energized.assign(4, 1);
  s.node_substation = {0, 1, 2, 3};
  s.line_current = {0.5, 0.5, 0.5};
  s.status = PowerFlowStatus::converged;
  const LimitReport r = evaluate_limits(c, s);
  EXPECT_DOUBLE_EQ(r.voltage_violation_fraction, 0.75);
  EXPECT_DOUBLE_EQ(r.overload_fraction, 0.0);
}

TEST(Limits, OneOverloadedLineOfSix) {
  const GridCase c = load_case(fixtures::five_bus_case());
  const GridState s = five_bus_env().reset(0);
  PowerFlowSolution sol = s.solution;
  ASSERT_DOUBLE_EQ(evaluate_limits(c, sol).overload_fraction, 0.0);
  ASSERT_DOUBLE_EQ(evaluate_limits(c, sol).voltage_violation_fraction, 0.0);
  sol.line_current[3] = 1.1 * c.lines[3].i_max;
  const LimitReport r = evaluate_limits(c, sol);
  EXPECT_DOUBLE_EQ(r.overload_fraction, 1.0 / 6.0);
  ASSERT_EQ(r.overloaded_lines.size(), 1u);
  EXPECT_NEAR(r.overloaded_lines[0].usage_percent, 110.0, 1e-9);
}

TEST(Limits, BoundaryValuesAreFeasible) {
  const GridCase c = load_case(fixtures::five_bus_case());
  PowerFlowSolution sol = five_bus_env().reset(0).solution;
  for (std::size_t k = 0; k < sol.voltage_magnitude.size(); ++k)
    sol.voltage_magnitude[k] = k % 2 ? c.buses[k].v_max : c.buses[k].v_min;
  for (std::size_t j = 0; j < c.line_count(); ++j) sol.line_current[j] = c.lines[j].i_max;
  const LimitReport r = evaluate_limits(c, sol);
  EXPECT_EQ(r.voltage_violation_fraction, 0.0);
  EXPECT_EQ(r.overload_fraction, 0.0);
}

TEST(Limits, MatchesBruteForceOnRandomSolutions) {
  for (const char* json : {fixtures::five_bus_case(), fixtures::fourteen_bus_case()}) {
    const GridCase c = load_case(json);
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
      const PowerFlowSolution s = random_solution(c, rng);
      ASSERT_EQ(evaluate_limits(c, s), brute_force_limits(c, s)) << trial;
    }
  }
}
