#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "gridsafe/env/environment.hpp"
#include "gridsafe/error.hpp"
#include "gridsafe/eval/report.hpp"
#include "gridsafe/eval/rollout.hpp"
#include "gridsafe/learner/safety_sac.hpp"
#include "gridsafe/replay/advisor.hpp"
#include "gridsafe/replay/buffer.hpp"
#include "gridsafe/replay/refine.hpp"

namespace gridsafe {

struct TrainConfig {
  std::size_t total_steps = 20000;  // environment interactions
  std::size_t warmup = 500;         // interactions before the first update
  std::size_t buffer_capacity = 5000;
  std::size_t episode_stride = 288;
  std::size_t eval_every = 0;  // 0 disables learning-curve evaluation
  std::size_t eval_episodes = 2;
  std::size_t checkpoint_every = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (total_steps == 0 || buffer_capacity == 0) throw InvariantError("train: total_steps and buffer must be > 0");
    if (eval_every > 0 && eval_episodes == 0) throw InvariantError("train: eval_episodes must be >= 1");
  }
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  std::vector<StepReport> updates;  // one per gradient step
  RefinementSummary refinement;
  std::size_t episodes = 0;
};

struct TrainHooks {
  std::function<void(std::uint64_t step, const SafetySac&)> checkpoint;
};

inline Policy greedy_policy(SafetySac& learner) {
  return [&learner](const GridState& s) { return learner.select_action(s, SafetySac::Mode::greedy); };
}

/// Interaction loop: sample an action, step, store, update; every
/// `refine.period` interactions the advisor (if any) refines the buffer.
inline TrainResult train(const Environment& env, SafetySac& learner, const TrainConfig& cfg,
                         Advisor* advisor, const RefinementConfig& refine_cfg, const TrainHooks& hooks = {}) {
  cfg.validate();
  refine_cfg.validate();
  const GridCase& c = env.grid();
  ReplayBuffer buffer(cfg.buffer_capacity);
  std::mt19937_64 episode_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto offsets = episode_offsets(env, cfg.episode_stride);
  if (offsets.empty()) throw UsageError("train: chronics too short for one episode");
  std::uniform_int_distribution<std::size_t> pick(0, offsets.size() - 1);

  TrainResult out;
  auto fresh = [&] {
    ++out.episodes;
    return env.reset(offsets[pick(episode_rng)]);
  };
  GridState s = fresh();
  const std::size_t start = std::max(cfg.warmup, learner.config().batch_size);
  for (std::size_t step = 1; step <= cfg.total_steps; ++step) {
    Transition t = env.step(s, learner.select_action(s, SafetySac::Mode::sample));
    s = t.next_state.terminal ? fresh() : t.next_state;
    buffer.push(std::move(t));

    if (step >= start) out.updates.push_back(learner.train_step(c, buffer));
    if (advisor && step % static_cast<std::size_t>(refine_cfg.period) == 0) {
      const RefinementSummary r = refine_buffer(buffer, *advisor, env, refine_cfg);
      out.refinement.candidates += r.candidates;
      out.refinement.refined += r.refined;
      out.refinement.advisor_rounds += r.advisor_rounds;
    }
    if (cfg.eval_every > 0 && step % cfg.eval_every == 0) {
      RolloutOptions ro;
      ro.episodes = cfg.eval_episodes;
      ro.seed = cfg.seed + step;
      ro.stride = cfg.episode_stride;
      const ReportAggregate a = aggregate(rollout(env, greedy_policy(learner), ro));
      out.curve.push_back({step, a.mean.cumulative_reward, a.mean.survival_step, a.mean.overload_rate,
                           a.mean.violation_rate});
    }
    if (hooks.checkpoint && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
      hooks.checkpoint(step, learner);
  }
  return out;
}

}  // namespace gridsafe
