#pragma once

#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "gridsafe/env/environment.hpp"
#include "gridsafe/replay/advisor.hpp"
#include "gridsafe/replay/buffer.hpp"
#include "gridsafe/replay/prompt.hpp"
#include "gridsafe/replay/proposal.hpp"

namespace gridsafe {

struct RefineRound {
  std::string prompt;
  std::string response;
  std::string outcome;  // "accepted", or why the round failed
  std::optional<double> reward;
  bool accepted = false;
};

struct RefineResult {
  std::optional<Transition> refined;
  std::vector<RefineRound> rounds;
};

/// Refined transitions must beat the original reward; at equal reward a
/// lower safety cost wins.
inline bool improves(const Transition& candidate, const Transition& original, double alpha_v, double alpha_l) {
  if (candidate.reward != original.reward) return candidate.reward > original.reward;
  return candidate.safety_cost(alpha_v, alpha_l) < original.safety_cost(alpha_v, alpha_l);
}

/// Up to K advisor rounds for one stored transition. Each round re-simulates
/// the proposal from the stored pre-action state; the first improving
/// proposal is returned as a refined transition. Advisor exceptions count
/// as failed rounds.
inline RefineResult refine(const Transition& original, Advisor& advisor, const Environment& env,
                           const RefinementConfig& cfg) {
  const GridCase& c = env.grid();
  const EnvConfig& ec = env.config();
  RefineResult result;
  std::vector<Action> tried;
  if (original.state.terminal) return result;
  const std::string prompt = build_prompt(original, c, cfg);
  for (int k = 0; k < cfg.max_rounds; ++k) {
    RefineRound round;
    round.prompt = prompt;
    try {
      round.response = advisor.respond({prompt, original, env, k, tried});
    } catch (const std::exception& e) {
      round.outcome = std::string("advisor failure: ") + e.what();
      result.rounds.push_back(std::move(round));
      continue;
    }
    const AdvisorProposal p = parse_proposal(round.response, c);
    if (!p.ok()) {
      round.outcome = "unparseable: " + p.message();
      result.rounds.push_back(std::move(round));
      continue;
    }
    const auto action = proposal_to_action(c, p);
    if (!action) {
      round.outcome = "rejected: lines share no substation";
      result.rounds.push_back(std::move(round));
      continue;
    }
    tried.push_back(*action);
    const ValidatedAction va = validate_action(c, original.state.topology, *action);
    if (!va.accepted()) {
      round.outcome = std::string("rejected: ") + to_string(va.rejection);
      result.rounds.push_back(std::move(round));
      continue;
    }
    Transition t = env.step(original.state, *action);
    round.reward = t.reward;
    if (!improves(t, original, ec.alpha_v, ec.alpha_l)) {
      round.outcome = "no improvement";
      result.rounds.push_back(std::move(round));
      continue;
    }
    round.outcome = "accepted";
    round.accepted = true;
    result.rounds.push_back(std::move(round));
    t.refined = true;
    result.refined = std::move(t);
    break;
  }
  return result;
}

struct RefinementSummary {
  std::size_t candidates = 0;
  std::size_t refined = 0;
  std::size_t advisor_rounds = 0;
};

/// One invocation over the buffer: candidates are refined sequentially and
/// accepted tuples are appended alongside their originals.
inline RefinementSummary refine_buffer(ReplayBuffer& buffer, Advisor& advisor, const Environment& env,
                                       const RefinementConfig& cfg) {
  RefinementSummary s;
  const auto candidates = buffer.select_candidates(cfg);
  s.candidates = candidates.size();
  for (const auto& item : candidates) {
    buffer.mark_processed(item.seq);
    RefineResult r = refine(item.transition, advisor, env, cfg);
    s.advisor_rounds += r.rounds.size();
    if (r.refined) {
      buffer.push(std::move(*r.refined));
      ++s.refined;
    }
  }
  return s;
}

}  // namespace gridsafe
