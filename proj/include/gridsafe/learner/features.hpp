#pragma once

#include <algorithm>
#include <cstddef>

#include <Eigen/Dense>

#include "gridsafe/env/environment.hpp"
#include "gridsafe/error.hpp"

namespace gridsafe {

/// Offsets into the feature vector. Frames are stacked oldest first; each
/// frame holds busbar voltages, line loadings and line status.
struct FeatureLayout {
  std::size_t substations = 0, lines = 0, elements = 0, n_hist = 1;

  FeatureLayout() = default;
  FeatureLayout(const GridCase& c, std::size_t history)
      : substations(c.substations.size()), lines(c.line_count()), elements(c.element_count()), n_hist(history) {
    if (history == 0) throw InvariantError("feature history length must be > 0");
  }

  std::size_t frame_size() const { return 2 * substations + 2 * lines; }
  std::size_t frame(std::size_t k) const { return k * frame_size(); }  // k = 0 oldest
  std::size_t voltage(std::size_t k, std::size_t sub, int busbar) const {
    return frame(k) + 2 * sub + static_cast<std::size_t>(busbar);
  }
  std::size_t loading(std::size_t k, std::size_t line) const { return frame(k) + 2 * substations + line; }
  std::size_t status(std::size_t k, std::size_t line) const { return loading(k, line) + lines; }
  /// Newest-frame loading of `line`.
  std::size_t loading(std::size_t line) const { return loading(n_hist - 1, line); }
  std::size_t busbar_onehot(std::size_t element, int busbar) const {
    return n_hist * frame_size() + 2 * element + static_cast<std::size_t>(busbar);
  }
  std::size_t cooldown(std::size_t element) const { return n_hist * frame_size() + 2 * elements + element; }
  std::size_t overflow(std::size_t line) const { return n_hist * frame_size() + 3 * elements + line; }
  std::size_t time() const { return n_hist * frame_size() + 3 * elements + lines; }
  std::size_t terminal() const { return time() + 1; }
  std::size_t size() const { return terminal() + 1; }
};

inline constexpr double max_loading_feature = 5.0;

/// Bounded, deterministic state features. Voltages enter as 10*(V-1)
/// clipped to [-5, 5] (0 where the busbar has no node), loadings as rho
/// clipped at 5. Terminal states give zeros with the terminal flag set.
inline Eigen::VectorXd featurize(const GridState& s, const FeatureLayout& L, const EnvConfig& cfg) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L.size()));
  auto at = [&](std::size_t i) -> double& { return x(static_cast<Eigen::Index>(i)); };
  if (s.terminal) {
    at(L.terminal()) = 1.0;
    return x;
  }
  if (s.history.empty()) throw UsageError("featurize: state carries no history frame");
  for (std::size_t k = 0; k < L.n_hist; ++k) {
    // Missing early frames repeat the oldest available one.
    const std::size_t back = L.n_hist - 1 - k;
    const Frame& f = s.history[s.history.size() - 1 - std::min(back, s.history.size() - 1)];
    for (std::size_t sub = 0; sub < L.substations; ++sub)
      for (int b = 0; b < 2; ++b) {
        const double v = f.busbar_voltage[2 * sub + static_cast<std::size_t>(b)];
        at(L.voltage(k, sub, b)) = v > 0 ? std::clamp(10.0 * (v - 1.0), -5.0, 5.0) : 0.0;
      }
    for (std::size_t j = 0; j < L.lines; ++j) {
      at(L.loading(k, j)) = std::min(f.line_loading[j], max_loading_feature);
      at(L.status(k, j)) = f.line_status[j] ? 1.0 : 0.0;
    }
  }
  for (std::size_t e = 0; e < L.elements; ++e) {
    at(L.busbar_onehot(e, s.topology.element_busbar[e])) = 1.0;
    at(L.cooldown(e)) = s.topology.cooldowns[e] > 0 ? 1.0 : 0.0;
  }
  const double trip = cfg.overflow_trip_steps > 0 ? cfg.overflow_trip_steps : 1;
  for (std::size_t j = 0; j < L.lines; ++j) at(L.overflow(j)) = std::min(1.0, s.overflow_steps[j] / trip);
  at(L.time()) = std::min(1.0, static_cast<double>(s.t) / cfg.max_episode_length);
  return x;
}

}  // namespace gridsafe
