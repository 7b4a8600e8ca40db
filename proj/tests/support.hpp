#pragma once

// Shared helpers and independent oracles for the unit and acceptance tests.

#include <cmath>
#include <functional>
#include <set>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gridsafe/gridsafe.hpp"
#include "gridsafe/fixtures.hpp"

namespace gridsafe::testing {

inline std::shared_ptr<const GridCase> five_bus() {
  static const auto c = std::make_shared<const GridCase>(load_case(fixtures::five_bus_case()));
  return c;
}

inline std::shared_ptr<const Chronics> five_bus_chronics() {
  static const auto ch = std::make_shared<const Chronics>(fixtures::five_bus_chronics(*five_bus()));
  return ch;
}

inline Environment five_bus_env(EnvConfig cfg = {}) { return Environment(five_bus(), five_bus_chronics(), cfg); }

/// Environment over a hand-written chronics CSV.
inline Environment env_from(const std::string& case_json, const std::string& csv, EnvConfig cfg = {},
                            double step_minutes = 5.0) {
  auto c = std::make_shared<const GridCase>(load_case(case_json));
  auto ch = std::make_shared<const Chronics>(load_chronics(csv, *c, step_minutes));
  return Environment(c, ch, cfg);
}

inline Environment fourteen_bus_env() {
  return env_from(fixtures::fourteen_bus_case(), fixtures::fourteen_bus_chronics());
}

/// Lossless two-bus line, reactance x, unity-power-factor load p at the far
/// end, sending voltage v1. Receiving-end balance gives sin(th) = -p x /
/// (v1 v2) and v2 = v1 cos(th); the high-voltage root is found by bisection
/// on [v1/sqrt(2), v1]. Returns nothing when no real root exists.
struct TwoBusSolution {
  double v2;
  double theta2;
};

inline std::optional<TwoBusSolution> two_bus_oracle(double v1, double x, double p) {
  auto g = [&](double v2) {
    const double s = p * x / (v1 * v2);
    if (s > 1.0) return -1.0;
    return v2 - v1 * std::sqrt(1.0 - s * s);
  };
  double lo = v1 / std::sqrt(2.0), hi = v1;
  if (!(g(lo) < 0.0 && g(hi) > 0.0)) return std::nullopt;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? hi : lo) = mid;
  }
  const double v2 = 0.5 * (lo + hi);
  return TwoBusSolution{v2, -std::asin(p * x / (v1 * v2))};
}

inline std::string two_bus_chronics(double load_mw) {
  return "load_0_p,gen_0_p\n" + std::to_string(load_mw) + "," + std::to_string(load_mw) + "\n";
}

/// Element-by-element limit evaluation, written without reference to the
/// library's loop structure.
inline LimitReport brute_force_limits(const GridCase& c, const PowerFlowSolution& sol) {
  LimitReport r;
  std::size_t bad_buses = 0;
  for (std::size_t bus = 0; bus < c.buses.size(); ++bus) {
    std::optional<std::size_t> worst;
    double worst_excess = 0.0;
    for (std::size_t node = 0; node < sol.voltage_magnitude.size(); ++node) {
      if (!sol.energized[node] || c.substations[sol.node_substation[node]].bus != bus) continue;
      const double v = sol.voltage_magnitude[node];
      double excess = 0.0;
      if (v < c.buses[bus].v_min) excess = c.buses[bus].v_min - v;
      else if (v > c.buses[bus].v_max) excess = v - c.buses[bus].v_max;
      else continue;
      if (!worst || excess > worst_excess) worst = node, worst_excess = excess;
    }
    if (worst) {
      ++bad_buses;
      r.violating_buses.push_back({bus, sol.voltage_magnitude[*worst]});
    }
  }
  std::size_t hot = 0;
  for (std::size_t j = 0; j < c.lines.size(); ++j) {
    if (sol.line_current[j] > c.lines[j].i_max) {
      ++hot;
      r.overloaded_lines.push_back({j, 100.0 * sol.line_current[j] / c.lines[j].i_max});
    }
  }
  r.voltage_violation_fraction = static_cast<double>(bad_buses) / static_cast<double>(c.buses.size());
  r.overload_fraction = static_cast<double>(hot) / static_cast<double>(c.lines.size());
  return r;
}

/// Random solution over a random busbar split of `c`, with voltages and
/// currents often landing exactly on a limit.
template <class Rng>
PowerFlowSolution random_solution(const GridCase& c, Rng& rng) {
  std::uniform_int_distribution<int> bit(0, 1), pick(0, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TopologyState topo = TopologyState::base(c);
  for (auto& b : topo.element_busbar) b = static_cast<std::uint8_t>(bit(rng) && bit(rng));
  const EffectiveGraph g = build_effective_graph(c, topo);
  PowerFlowSolution s;
  const std::size_t n = g.nodes.size();
  s.voltage_magnitude.resize(n);
  s.voltage_angle.assign(n, 0.0);
  s.energized.resize(n);
  s.node_substation.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.node_substation[k] = g.nodes[k].substation;
    s.energized[k] = static_cast<std::uint8_t>(u(rng) < 0.9);
    const Bus& b = c.buses[c.substations[g.nodes[k].substation].bus];
    switch (pick(rng)) {
      case 0: s.voltage_magnitude[k] = b.v_min; break;
      case 1: s.voltage_magnitude[k] = b.v_max; break;
      default: s.voltage_magnitude[k] = 0.85 + 0.3 * u(rng);
    }
    if (!s.energized[k]) s.voltage_magnitude[k] = 0.0;
  }
  s.line_current.resize(c.lines.size());
  for (std::size_t j = 0; j < c.lines.size(); ++j)
    s.line_current[j] = pick(rng) == 0 ? c.lines[j].i_max : c.lines[j].i_max * 1.4 * u(rng);
  s.line_flow_p.assign(c.lines.size(), 0.0);
  s.line_loss_p.assign(c.lines.size(), 0.0);
  s.status = PowerFlowStatus::converged;
  return s;
}

/// Exhaustive one-step search over every enumerated single-substation action
/// (not only the endpoints of overloaded lines). Returns the lowest
/// (overload excess, worst loading) score among non-failing actions.
inline std::pair<double, double> lookahead_score(const GridCase& c, const GridState& s) {
  double excess = 0.0, worst = 0.0;
  for (std::size_t j = 0; j < c.lines.size(); ++j) {
    const double r = s.solution.line_current[j] / c.lines[j].i_max;
    excess += r > 1.0 ? r - 1.0 : 0.0;
    worst = std::max(worst, r);
  }
  return {excess, worst};
}

struct ExhaustiveBest {
  std::size_t index = 0;
  std::pair<double, double> score;
};

/// Brute force over every valid action; `only` restricts to actions at the
/// listed substations (do-nothing always competes).
inline ExhaustiveBest exhaustive_best(const Environment& env, const GridState& state,
                                      const std::set<std::size_t>& only = {}) {
  const ActionSpace space(env.grid());
  ExhaustiveBest best{0, {1e300, 1e300}};
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (i > 0 && !only.empty() && !only.count(*space.substation(i))) continue;
    if (!validate_action(env.grid(), state.topology, space[i]).accepted()) continue;
    const Transition t = env.step(state, space[i]);
    if (t.next_state.failed()) continue;
    const auto sc = lookahead_score(env.grid(), t.next_state);
    if (sc < best.score) best = {i, sc};
  }
  return best;
}

/// Discrete twin-critic SAC written from the textbook losses: encoder and
/// critics trained on the averaged twin MSE, actor on
/// E_a[alpha log pi - min Q], soft targets, plain SGD. No safety terms.
class PlainSacReference {
 public:
  struct Losses {
    double critic, actor;
  };

  explicit PlainSacReference(SafetySac& source) : cfg_(source.config()), rng_(source.rng()) {
    const SacNetworks& n = source.networks();
    enc_ = n.encoder;
    q1_ = n.q1;
    q2_ = n.q2;
    pi_ = n.policy;
    t1_ = n.q1_target;
    t2_ = n.q2_target;
  }

  Losses step(const SacBatch& b) {
    const double B = static_cast<double>(b.size());
    const auto n = static_cast<Eigen::Index>(b.size());

    // soft state value of the next state under the target critics
    const Eigen::MatrixXd zn = enc_.forward(b.s_next);
    const Eigen::MatrixXd ln = pi_.forward(zn);
    const Eigen::MatrixXd pn = softmax_columns(ln), lpn = log_softmax_columns(ln);
    const Eigen::MatrixXd tq = t1_.forward(zn).cwiseMin(t2_.forward(zn));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = 0.0;
      if (!b.done[static_cast<std::size_t>(i)])
        for (Eigen::Index a = 0; a < pn.rows(); ++a) v += pn(a, i) * (tq(a, i) - cfg_.alpha * lpn(a, i));
      y(i) = b.reward(i) + (b.done[static_cast<std::size_t>(i)] ? 0.0 : cfg_.gamma * v);
    }

    // dropout mask, drawn in the same order as the learner
    Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(cfg_.latent, n);
    if (cfg_.dropout > 0) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < cfg_.latent; ++i)
          mask(i, j) = u(rng_) < cfg_.dropout ? 0.0 : 1.0 / (1.0 - cfg_.dropout);
    }

    Mlp::Cache ce, c1, c2;
    const Eigen::MatrixXd z0 = enc_.forward(b.s, &ce);
    const Eigen::MatrixXd z = cfg_.dropout > 0 ? Eigen::MatrixXd(z0.cwiseProduct(mask)) : z0;
    const Eigen::MatrixXd o1 = q1_.forward(z, &c1), o2 = q2_.forward(z, &c2);
    Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(o1.rows(), n), g2 = g1;
    double e1 = 0.0, e2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto a = static_cast<Eigen::Index>(b.action[static_cast<std::size_t>(i)]);
      const double d1 = o1(a, i) - y(i), d2 = o2(a, i) - y(i);
      e1 += d1 * d1;
      e2 += d2 * d2;
      g1(a, i) = d1 / B;
      g2(a, i) = d2 / B;
    }
    Losses out{0.5 * (e1 / B + e2 / B), 0.0};
    Mlp gq1 = q1_.zeros_like(), gq2 = q2_.zeros_like(), genc = enc_.zeros_like();
    Eigen::MatrixXd dz = q1_.backward(c1, g1, gq1) + q2_.backward(c2, g2, gq2);
    if (cfg_.dropout > 0) dz = dz.cwiseProduct(mask);
    enc_.backward(ce, dz, genc);
    enc_.add_scaled(genc, -cfg_.lr_encoder);
    q1_.add_scaled(gq1, -cfg_.lr_critic);
    q2_.add_scaled(gq2, -cfg_.lr_critic);

    // actor on the updated latent
    const Eigen::MatrixXd za = enc_.forward(b.s);
    Mlp::Cache cp;
    const Eigen::MatrixXd lg = pi_.forward(za, &cp);
    const Eigen::MatrixXd p = softmax_columns(lg), lp = log_softmax_columns(lg);
    const Eigen::MatrixXd qm = q1_.forward(za).cwiseMin(q2_.forward(za));
    Eigen::MatrixXd dl(lg.rows(), n);
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      double base = 0.0;
      Eigen::VectorXd f(p.rows());
      for (Eigen::Index a = 0; a < p.rows(); ++a) {
        f(a) = cfg_.alpha * lp(a, j) - qm(a, j);
        total += p(a, j) * f(a);
        base += p(a, j) * f(a);
      }
      for (Eigen::Index a = 0; a < p.rows(); ++a) dl(a, j) = p(a, j) * (f(a) - base) / B;
    }
    out.actor = total / B;
    Mlp gpi = pi_.zeros_like();
    pi_.backward(cp, dl, gpi);
    pi_.add_scaled(gpi, -cfg_.lr_actor);
    t1_.soft_update(q1_, cfg_.soft_rate);
    t2_.soft_update(q2_, cfg_.soft_rate);
    return out;
  }

  const Mlp& encoder() const { return enc_; }
  const Mlp& q1() const { return q1_; }
  const Mlp& q2() const { return q2_; }
  const Mlp& policy() const { return pi_; }

 private:
  SacConfig cfg_;
  std::mt19937_64 rng_;
  Mlp enc_, q1_, q2_, pi_, t1_, t2_;
};

// Final layer outputs a constant vector regardless of input.
inline void make_constant(Mlp& m, const Eigen::VectorXd& out) {
  m.layers().back().w.setZero();
  m.layers().back().b = out;
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

// Flattened gradient of `grad` against central differences of `loss` over
// every parameter of `net`.
inline double relative_gradient_error(Mlp& net, const Mlp& grad, const std::function<double()>& loss) {
  Mlp g = grad;
  const auto p = net.parameters();
  const auto gp = g.parameters();
  double diff = 0.0, na = 0.0, nb = 0.0;
  const double h = 1e-6;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double keep = *p[k];
    *p[k] = keep + h;
    const double up = loss();
    *p[k] = keep - h;
    const double down = loss();
    *p[k] = keep;
    const double fd = (up - down) / (2 * h);
    diff += (fd - *gp[k]) * (fd - *gp[k]);
    na += fd * fd;
    nb += *gp[k] * *gp[k];
  }
  const double denom = std::sqrt(na) + std::sqrt(nb);
  return denom < 1e-14 ? 0.0 : std::sqrt(diff) / denom;
}

// Tiny random problem for the gradient checks.
struct GradProblem {
  SacConfig cfg;
  SacNetworks nets;
  SacBatch batch;
  Targets targets;
};

inline GradProblem grad_problem(std::uint64_t seed) {
  GradProblem g;
  g.cfg.hidden = 2;
  g.cfg.latent = 3;
  g.cfg.alpha = 0.3;
  g.cfg.epsilon_c = 0.5;
  std::mt19937_64 rng(seed);
  const int input = 5, actions = 4, B = 6;
  g.nets = make_networks(input, actions, g.cfg, rng);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> a(0, actions - 1);
  g.batch.s = Eigen::MatrixXd::NullaryExpr(input, B, [&] { return n(rng); });
  g.batch.s_next = Eigen::MatrixXd::NullaryExpr(input, B, [&] { return n(rng); });
  g.batch.reward = Eigen::VectorXd::NullaryExpr(B, [&] { return n(rng); });
  g.batch.cost = Eigen::VectorXd::NullaryExpr(B, [&] { return std::abs(n(rng)) * 0.3; });
  for (int i = 0; i < B; ++i) {
    g.batch.action.push_back(a(rng));
    g.batch.done.push_back(i % 3 == 0);
  }
  g.targets = compute_targets(g.nets, g.cfg, g.batch);
  return g;
}

/// Fixed transitions from a few random-policy episodes on the five-bus case.
inline std::vector<Transition> sample_transitions(const Environment& env, std::size_t count, std::uint64_t seed) {
  const ActionSpace space(env.grid());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
  std::uniform_int_distribution<std::size_t> start(0, env.chronics().rows() - 300);
  std::vector<Transition> out;
  GridState s = env.reset(start(rng));
  while (out.size() < count) {
    Transition t = env.step(s, space[pick(rng)]);
    s = t.next_state.terminal ? env.reset(start(rng)) : t.next_state;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace gridsafe::testing
