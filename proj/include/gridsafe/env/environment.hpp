#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gridsafe/env/action.hpp"
#include "gridsafe/env/chronics.hpp"
#include "gridsafe/env/reward.hpp"
#include "gridsafe/error.hpp"
#include "gridsafe/grid/case.hpp"
#include "gridsafe/grid/limits.hpp"
#include "gridsafe/grid/power_flow.hpp"
#include "gridsafe/grid/topology.hpp"

namespace gridsafe {

struct EnvConfig {
  double penalty = 1.0;        // tracking penalty coefficient
  double alpha_v = 0.9;        // safety-cost weight on C_v
  double alpha_l = 0.1;        // safety-cost weight on C_l
  double kappa = 1.0;          // scalarization weight
  int max_episode_length = 288;
  int cooldown_steps = 3;
  // Thermal protection: a line overloaded for this many consecutive steps
  // trips; 0 disables. Lines above hard_overflow_ratio trip immediately.
  int overflow_trip_steps = 3;
  double hard_overflow_ratio = 2.0;
  double failure_reward = -10.0;  // reward of a collapse transition
  int history_length = 6;
  PowerFlowOptions power_flow;

  void validate() const {
    if (!(penalty >= 0 && alpha_v >= 0 && alpha_l >= 0 && kappa >= 0))
      throw InvariantError("env: penalty, alpha_v, alpha_l and kappa must be >= 0");
    if (max_episode_length <= 0) throw InvariantError("env: max_episode_length must be > 0");
    if (cooldown_steps < 0 || overflow_trip_steps < 0) throw InvariantError("env: negative step count");
    if (history_length <= 0) throw InvariantError("env: history_length must be > 0");
  }
};

enum class TerminalReason { none, diverged, islanded, horizon };

inline const char* to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::none: return "none";
    case TerminalReason::diverged: return "diverged";
    case TerminalReason::islanded: return "islanded";
    case TerminalReason::horizon: return "horizon";
  }
  return "?";
}

/// Physical snapshot kept for frame stacking. Voltages are indexed by
/// 2*substation + busbar (0 where no energized node exists).
struct Frame {
  std::vector<double> busbar_voltage;
  std::vector<double> line_loading;
  std::vector<std::uint8_t> line_status;
  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Complete environment state. A copy is enough to reseat a simulation.
struct GridState {
  int t = 0;
  std::size_t row = 0;
  TopologyState topology;
  PowerFlowSolution solution;
  LimitReport limits;
  std::vector<double> dispatch;  // generator P, p.u.
  std::vector<int> overflow_steps;
  std::vector<Frame> history;  // oldest first, newest = this state
  bool terminal = false;
  TerminalReason terminal_reason = TerminalReason::none;

  bool failed() const {
    return terminal_reason == TerminalReason::diverged || terminal_reason == TerminalReason::islanded;
  }

  friend bool operator==(const GridState&, const GridState&) = default;
};

struct Transition {
  GridState state;
  Action action;  // as submitted
  double reward = 0.0;
  double voltage_fraction = 0.0;   // C_v
  double overload_fraction = 0.0;  // C_l
  GridState next_state;
  bool refined = false;
  RejectionReason rejection = RejectionReason::none;

  double safety_cost(double alpha_v, double alpha_l) const {
    return compute_safety_cost(voltage_fraction, overload_fraction, alpha_v, alpha_l);
  }

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Episodic topology-control environment. Stepping is a pure function of
/// (state, action); the object itself only holds the case, chronics and
/// configuration.
class Environment {
 public:
  Environment(std::shared_ptr<const GridCase> grid, std::shared_ptr<const Chronics> chronics, EnvConfig config)
      : case_(std::move(grid)), chronics_(std::move(chronics)), config_(std::move(config)) {
    config_.validate();
  }

  const GridCase& grid() const { return *case_; }
  const Chronics& chronics() const { return *chronics_; }
  const EnvConfig& config() const { return config_; }

  /// Base topology at chronics row `offset`. Throws NumericError when the
  /// initial operating point has no power-flow solution.
  GridState reset(std::size_t offset) const {
    if (offset >= chronics_->rows())
      throw UsageError("reset: offset " + std::to_string(offset) + " beyond chronics length " +
                       std::to_string(chronics_->rows()));
    GridState s;
    s.row = offset;
    s.topology = TopologyState::base(*case_);
    s.overflow_steps.assign(case_->line_count(), 0);
    simulate(s, /*protection=*/false);
    if (s.failed())
      throw NumericError("reset: unusable episode at row " + std::to_string(offset) + " (" +
                         to_string(s.terminal_reason) + ")");
    mark_horizon(s);
    return s;
  }

  /// Advances one row. Failure transitions (divergence, stranded injections)
  /// carry failure_reward and C_v = C_l = 1.
  Transition step(const GridState& state, const Action& action) const {
    if (state.terminal) throw UsageError("step: state is terminal");
    Transition tr;
    tr.state = state;
    tr.action = action;
    const ValidatedAction va = validate_action(*case_, state.topology, action);
    tr.rejection = va.rejection;

    GridState next = state;
    next.t = state.t + 1;
    next.row = state.row + 1;
    for (int& cd : next.topology.cooldowns) cd = std::max(0, cd - 1);
    for (const auto& ch : va.action.changes) {
      auto& bb = next.topology.element_busbar[ch.element];
      if (bb != ch.busbar) {
        bb = static_cast<std::uint8_t>(ch.busbar);
        next.topology.cooldowns[ch.element] = config_.cooldown_steps;
      }
    }
    simulate(next, /*protection=*/true);
    if (next.failed()) {
      tr.reward = config_.failure_reward;
      tr.voltage_fraction = 1.0;
      tr.overload_fraction = 1.0;
    } else {
      tr.reward = reward_of(next);
      tr.voltage_fraction = next.limits.voltage_violation_fraction;
      tr.overload_fraction = next.limits.overload_fraction;
      mark_horizon(next);
    }
    tr.next_state = std::move(next);
    return tr;
  }

  /// Reward of a solved (non-failed) state.
  double reward_of(const GridState& s) const {
    const GridCase& c = *case_;
    const std::size_t n_sub = c.substations.size();
    std::vector<double> load(n_sub, 0.0), gen(n_sub, 0.0);
    for (std::size_t i = 0; i < c.loads.size(); ++i)
      load[c.loads[i].substation] += chronics_->load_p[s.row][i] / c.base_mva;
    std::vector<double> reference(c.generators.size());
    for (std::size_t g = 0; g < c.generators.size(); ++g) {
      gen[c.generators[g].substation] += s.dispatch[g];
      reference[g] = chronics_->gen_p[s.row][g] / c.base_mva;
    }
    return compute_reward(load, gen, s.dispatch, reference, config_.penalty, chronics_->step_hours());
  }

 private:
  void mark_horizon(GridState& s) const {
    if (s.terminal) return;
    if (s.t >= config_.max_episode_length || s.row + 1 >= chronics_->rows()) {
      s.terminal = true;
      s.terminal_reason = TerminalReason::horizon;
    }
  }

  std::vector<NodeInjection> injections(const EffectiveGraph& g, std::size_t row,
                                        std::vector<double>& dispatch) const {
    const GridCase& c = *case_;
    std::vector<NodeInjection> inj(g.nodes.size());
    std::vector<int> has_gen(g.nodes.size(), 0);
    dispatch.assign(c.generators.size(), 0.0);
    for (std::size_t k = 0; k < c.generators.size(); ++k) {
      const int n = g.element_node[c.element_index({ElementKind::generator, k})];
      const Generator& gen = c.generators[k];
      dispatch[k] = chronics_->gen_p[row][k] / c.base_mva;
      inj[n].p += dispatch[k];
      if (gen.voltage_control) {
        if (!has_gen[n]) inj[n].v_set = gen.v_set;
        inj[n].kind = NodeKind::pv;
        has_gen[n] = 1;
      } else {
        inj[n].q += chronics_->gen_q[row][k] / c.base_mva;
      }
    }
    for (std::size_t k = 0; k < c.loads.size(); ++k) {
      const int n = g.element_node[c.element_index({ElementKind::load, k})];
      inj[n].p -= chronics_->load_p[row][k] / c.base_mva;
      inj[n].q -= chronics_->load_q[row][k] / c.base_mva;
    }
    return inj;
  }

  // Solves the state's row under its topology; fills solution, limits,
  // dispatch, terminal flags and the history frame.
  void simulate(GridState& s, bool protection) const {
    const GridCase& c = *case_;
    const std::size_t m = c.line_count();
    std::vector<int> prev_overflow = s.overflow_steps;
    std::vector<std::uint8_t> tripped(m, 0);
    for (std::size_t pass = 0; pass <= m; ++pass) {
      const EffectiveGraph g = build_effective_graph(c, s.topology);
      const int slack_island = g.slack_node >= 0 ? g.island[g.slack_node] : -1;
      bool stranded = slack_island < 0;
      for (std::size_t k = 0; k < c.generators.size() && !stranded; ++k)
        stranded = g.island[g.element_node[c.element_index({ElementKind::generator, k})]] != slack_island;
      for (std::size_t k = 0; k < c.loads.size() && !stranded; ++k)
        stranded = g.island[g.element_node[c.element_index({ElementKind::load, k})]] != slack_island;
      if (stranded) {
        fail(s, TerminalReason::islanded);
        return;
      }
      const auto inj = injections(g, s.row, s.dispatch);
      s.solution = solve_power_flow(c, g, inj, config_.power_flow);
      if (!s.solution.converged()) {
        fail(s, TerminalReason::diverged);
        return;
      }
      // Slack generator absorbs the residual.
      const std::size_t slack_sub = c.slack_substation();
      for (std::size_t k = 0; k < c.generators.size(); ++k) {
        if (c.generators[k].substation != slack_sub) continue;
        if (g.element_node[c.element_index({ElementKind::generator, k})] != g.slack_node) continue;
        double other = 0.0;
        for (std::size_t j = 0; j < c.generators.size(); ++j)
          if (j != k && g.element_node[c.element_index({ElementKind::generator, j})] == g.slack_node)
            other += s.dispatch[j];
        double load = 0.0;
        for (std::size_t j = 0; j < c.loads.size(); ++j)
          if (g.element_node[c.element_index({ElementKind::load, j})] == g.slack_node)
            load += chronics_->load_p[s.row][j] / c.base_mva;
        s.dispatch[k] = s.solution.node_p[g.slack_node] + load - other;
        break;
      }
      if (!protection) break;

      bool any_trip = false;
      for (std::size_t j = 0; j < m; ++j) {
        if (!s.topology.line_status[j]) continue;
        const double rho = s.solution.line_current[j] / c.lines[j].i_max;
        const bool soft = pass == 0 && config_.overflow_trip_steps > 0 && rho > 1.0 &&
                          prev_overflow[j] + 1 >= config_.overflow_trip_steps;
        if (rho > config_.hard_overflow_ratio || soft) {
          s.topology.line_status[j] = 0;
          tripped[j] = 1;
          any_trip = true;
        }
      }
      if (!any_trip) break;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const bool over = s.topology.line_status[j] && s.solution.line_current[j] > c.lines[j].i_max;
      s.overflow_steps[j] = (over && !tripped[j]) ? prev_overflow[j] + 1 : 0;
    }
    s.limits = evaluate_limits(c, s.solution);
    push_frame(s);
  }

  void fail(GridState& s, TerminalReason reason) const {
    s.terminal = true;
    s.terminal_reason = reason;
    s.limits = LimitReport{};
    push_frame(s);
  }

  void push_frame(GridState& s) const {
    const GridCase& c = *case_;
    Frame f;
    f.busbar_voltage.assign(2 * c.substations.size(), 0.0);
    f.line_loading.assign(c.line_count(), 0.0);
    f.line_status = s.topology.line_status;
    if (!s.failed()) {
      const EffectiveGraph g = build_effective_graph(c, s.topology);
      for (std::size_t n = 0; n < g.nodes.size(); ++n)
        f.busbar_voltage[2 * g.nodes[n].substation + g.nodes[n].busbar] = s.solution.voltage_magnitude[n];
      f.line_loading = line_loading(c, s.solution);
    }
    s.history.push_back(std::move(f));
    const auto keep = static_cast<std::size_t>(config_.history_length);
    if (s.history.size() > keep) s.history.erase(s.history.begin(), s.history.end() - keep);
  }

  std::shared_ptr<const GridCase> case_;
  std::shared_ptr<const Chronics> chronics_;
  EnvConfig config_;
};

}  // namespace gridsafe
