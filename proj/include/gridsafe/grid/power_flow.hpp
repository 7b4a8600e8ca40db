#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gridsafe/grid/case.hpp"
#include "gridsafe/grid/topology.hpp"

namespace gridsafe {

enum class NodeKind { pq, pv, slack };

/// Specified injection at an effective node, per-unit on the case base.
struct NodeInjection {
  double p = 0.0;  // generation minus load
  double q = 0.0;
  NodeKind kind = NodeKind::pq;
  double v_set = 1.0;
};

struct PowerFlowOptions {
  double tolerance = 1e-8;
  int max_iterations = 20;
};

enum class PowerFlowStatus { converged, diverged, singular };

struct PowerFlowSolution {
  std::vector<double> voltage_magnitude;  // per node, p.u. (0 when de-energized)
  std::vector<double> voltage_angle;      // per node, rad
  std::vector<std::uint8_t> energized;    // node lies in the slack island
  std::vector<std::size_t> node_substation;
  std::vector<double> node_p;      // realized injection, p.u.
  std::vector<double> node_q;
  std::vector<double> line_current;  // per line, larger end current, p.u.
  std::vector<double> line_flow_p;   // per line, origin-end active power, MW
  std::vector<double> line_loss_p;   // per line, series loss, p.u.
  double mismatch_norm = 0.0;        // max |residual|, p.u.
  int iterations = 0;
  PowerFlowStatus status = PowerFlowStatus::diverged;

  bool converged() const { return status == PowerFlowStatus::converged; }

  friend bool operator==(const PowerFlowSolution&, const PowerFlowSolution&) = default;
};

/// Polar Newton-Raphson on the slack island of `graph`, flat start.
/// Nodes outside the slack island are reported de-energized. Iterations
/// counts mismatch evaluations, so a flat start that is already balanced
/// reports 1.
inline PowerFlowSolution solve_power_flow(const GridCase& c, const EffectiveGraph& graph,
                                          const std::vector<NodeInjection>& injections,
                                          const PowerFlowOptions& options = {}) {
  using cd = std::complex<double>;
  using Eigen::MatrixXcd;
  using Eigen::MatrixXd;
  using Eigen::VectorXcd;
  using Eigen::VectorXd;

  const std::size_t n_nodes = graph.nodes.size();
  PowerFlowSolution sol;
  sol.voltage_magnitude.assign(n_nodes, 0.0);
  sol.voltage_angle.assign(n_nodes, 0.0);
  sol.energized.assign(n_nodes, 0);
  sol.node_p.assign(n_nodes, 0.0);
  sol.node_q.assign(n_nodes, 0.0);
  sol.node_substation.resize(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) sol.node_substation[k] = graph.nodes[k].substation;
  sol.line_current.assign(c.line_count(), 0.0);
  sol.line_flow_p.assign(c.line_count(), 0.0);
  sol.line_loss_p.assign(c.line_count(), 0.0);
  if (graph.slack_node < 0) {
    sol.status = PowerFlowStatus::singular;
    return sol;
  }

  // Compact indexing of the slack island, slack first.
  const int slack_island = graph.island[graph.slack_node];
  std::vector<int> local(n_nodes, -1);
  std::vector<std::size_t> global;
  global.push_back(static_cast<std::size_t>(graph.slack_node));
  for (std::size_t k = 0; k < n_nodes; ++k)
    if (graph.island[k] == slack_island && static_cast<int>(k) != graph.slack_node) global.push_back(k);
  for (std::size_t i = 0; i < global.size(); ++i) local[global[i]] = static_cast<int>(i);
  const Eigen::Index n = static_cast<Eigen::Index>(global.size());

  MatrixXcd Y = MatrixXcd::Zero(n, n);
  for (const auto& e : graph.edges) {
    const int a = local[e.from_node], b = local[e.to_node];
    if (a < 0 || b < 0) continue;
    const Line& l = c.lines[e.line];
    const cd ys = 1.0 / cd(l.r, l.x);
    const cd ysh(0.0, l.b / 2.0);
    Y(a, a) += ys + ysh;
    Y(b, b) += ys + ysh;
    Y(a, b) -= ys;
    Y(b, a) -= ys;
  }

  std::vector<int> pv, pq;  // local indices, excluding slack
  VectorXcd s_spec(n);
  VectorXd vm(n), va = VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const NodeInjection& inj = injections[global[i]];
    s_spec(i) = cd(inj.p, inj.q);
    const bool is_slack = (i == 0);
    const NodeKind kind = is_slack ? NodeKind::slack : inj.kind;
    vm(i) = (kind == NodeKind::pq) ? 1.0 : inj.v_set;
    if (!is_slack) (kind == NodeKind::pv ? pv : pq).push_back(static_cast<int>(i));
  }
  std::vector<int> pvpq = pv;
  pvpq.insert(pvpq.end(), pq.begin(), pq.end());
  std::sort(pvpq.begin(), pvpq.end());
  const Eigen::Index npvpq = static_cast<Eigen::Index>(pvpq.size());
  const Eigen::Index npq = static_cast<Eigen::Index>(pq.size());

  auto voltage = [&]() {
    VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = std::polar(vm(i), va(i));
    return v;
  };
  auto mismatch = [&](const VectorXcd& v) {
    const VectorXcd s = v.cwiseProduct((Y * v).conjugate());
    VectorXd f(npvpq + npq);
    for (Eigen::Index k = 0; k < npvpq; ++k) f(k) = s(pvpq[k]).real() - s_spec(pvpq[k]).real();
    for (Eigen::Index k = 0; k < npq; ++k) f(npvpq + k) = s(pq[k]).imag() - s_spec(pq[k]).imag();
    return f;
  };

  PowerFlowStatus status = PowerFlowStatus::diverged;
  int evaluations = 0;
  double norm = 0.0;
  for (int it = 0; it <= options.max_iterations; ++it) {
    const VectorXcd v = voltage();
    const VectorXd f = mismatch(v);
    ++evaluations;
    norm = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(norm)) break;
    if (norm < options.tolerance) {
      status = PowerFlowStatus::converged;
      break;
    }
    if (it == options.max_iterations) break;

    const VectorXcd ibus = Y * v;
    VectorXcd vnorm(n);
    for (Eigen::Index i = 0; i < n; ++i) vnorm(i) = v(i) / std::abs(v(i));
    // dS/dVm = diag(V) conj(Y diag(Vnorm)) + conj(diag(I)) diag(Vnorm)
    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
    MatrixXcd ds_dvm(n, n), ds_dva(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k) {
        ds_dvm(i, k) = v(i) * std::conj(Y(i, k) * vnorm(k));
        ds_dva(i, k) = -cd(0, 1) * v(i) * std::conj(Y(i, k) * v(k));
      }
    for (Eigen::Index i = 0; i < n; ++i) {
      ds_dvm(i, i) += std::conj(ibus(i)) * vnorm(i);
      ds_dva(i, i) += cd(0, 1) * v(i) * std::conj(ibus(i));
    }
    MatrixXd J(npvpq + npq, npvpq + npq);
    for (Eigen::Index r = 0; r < npvpq; ++r) {
      for (Eigen::Index k = 0; k < npvpq; ++k) J(r, k) = ds_dva(pvpq[r], pvpq[k]).real();
      for (Eigen::Index k = 0; k < npq; ++k) J(r, npvpq + k) = ds_dvm(pvpq[r], pq[k]).real();
    }
    for (Eigen::Index r = 0; r < npq; ++r) {
      for (Eigen::Index k = 0; k < npvpq; ++k) J(npvpq + r, k) = ds_dva(pq[r], pvpq[k]).imag();
      for (Eigen::Index k = 0; k < npq; ++k) J(npvpq + r, npvpq + k) = ds_dvm(pq[r], pq[k]).imag();
    }
    Eigen::FullPivLU<MatrixXd> lu(J);
    if (!lu.isInvertible()) {
      status = PowerFlowStatus::singular;
      break;
    }
    const VectorXd dx = -lu.solve(f);
    for (Eigen::Index k = 0; k < npvpq; ++k) va(pvpq[k]) += dx(k);
    for (Eigen::Index k = 0; k < npq; ++k) vm(pq[k]) += dx(npvpq + k);
  }

  sol.iterations = evaluations;
  sol.mismatch_norm = norm;
  sol.status = status;
  if (status != PowerFlowStatus::converged) return sol;

  const VectorXcd v = voltage();
  const VectorXcd s = v.cwiseProduct((Y * v).conjugate());
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t k = global[i];
    sol.voltage_magnitude[k] = vm(i);
    sol.voltage_angle[k] = va(i);
    sol.energized[k] = 1;
    sol.node_p[k] = s(i).real();
    sol.node_q[k] = s(i).imag();
  }
  for (const auto& e : graph.edges) {
    const int a = local[e.from_node], b = local[e.to_node];
    if (a < 0 || b < 0) continue;
    const Line& l = c.lines[e.line];
    const cd ys = 1.0 / cd(l.r, l.x);
    const cd ysh(0.0, l.b / 2.0);
    const cd i_ab = ys * (v(a) - v(b)) + ysh * v(a);
    const cd i_ba = ys * (v(b) - v(a)) + ysh * v(b);
    const cd s_ab = v(a) * std::conj(i_ab);
    const cd s_ba = v(b) * std::conj(i_ba);
    sol.line_current[e.line] = std::max(std::abs(i_ab), std::abs(i_ba));
    sol.line_flow_p[e.line] = s_ab.real() * c.base_mva;
    sol.line_loss_p[e.line] = s_ab.real() + s_ba.real();
  }
  return sol;
}

}  // namespace gridsafe
