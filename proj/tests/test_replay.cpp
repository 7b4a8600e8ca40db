#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include "support.hpp"

using namespace gridsafe;
using namespace gridsafe::testing;

namespace {

Transition with_reward(double r) {
  Transition t;
  t.reward = r;
  return t;
}

// First do-nothing transition from row 0 whose next state collapses, and the
// state before it.
Transition failing_transition(const Environment& env) {
  GridState s = env.reset(0);
  while (!s.terminal) {
    Transition t = env.step(s, Action::do_nothing());
    if (t.next_state.failed()) return t;
    s = t.next_state;
  }
  throw std::runtime_error("fixture never fails under do-nothing");
}

std::string proposal_for(const GridCase& c, const Action& a) { return "analysis...\n" + format_proposal(c, a); }

// Records every transition handed to it and answers from a script.
class RecordingAdvisor : public Advisor {
 public:
  explicit RecordingAdvisor(std::string answer) : answer_(std::move(answer)) {}
  std::string respond(const AdvisorRequest& req) override {
    seen.push_back(req.transition.reward);
    return answer_;
  }
  std::vector<double> seen;

 private:
  std::string answer_;
};

class ThrowingAdvisor : public Advisor {
 public:
  std::string respond(const AdvisorRequest&) override { throw IoError("connection refused"); }
};

}  // namespace

TEST(Buffer, PushAndEvict) {
  ReplayBuffer b(5000);
  b.push(with_reward(0.0));
  EXPECT_EQ(b.size(), 1u);
  for (int i = 1; i < 5001; ++i) b.push(with_reward(static_cast<double>(i)));
  EXPECT_EQ(b.size(), 5000u);
  EXPECT_EQ(b.at(0).seq, 1u);
  EXPECT_EQ(b.at(0).transition.reward, 1.0);
  EXPECT_EQ(b.appended(), 5001u);
}

TEST(Buffer, RefinedAppendKeepsOriginal) {
  ReplayBuffer b(10);
  b.push(with_reward(-1.0));
  Transition r = with_reward(-0.5);
  r.refined = true;
  b.push(r);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_FALSE(b.at(0).transition.refined);
  EXPECT_TRUE(b.at(1).transition.refined);
}

TEST(Buffer, Sampling) {
  ReplayBuffer b(5000);
  for (int i = 0; i < 5000; ++i) b.push(with_reward(static_cast<double>(i)));
  std::mt19937_64 r1(4), r2(4);
  const auto a = b.sample_indices(32, r1), c = b.sample_indices(32, r2);
  EXPECT_EQ(a, c);
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 32u);

  ReplayBuffer small(8);
  for (int i = 0; i < 8; ++i) small.push(with_reward(static_cast<double>(i)));
  std::mt19937_64 r3(1);
  auto all = small.sample_indices(8, r3);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_THROW(small.sample_indices(9, r3), UsageError);
}

TEST(Buffer, SelectCandidates) {
  ReplayBuffer b(100);
  for (double r : {0.1, 0.5, 0.25}) b.push(with_reward(r));
  RefinementConfig cfg;
  cfg.reward_threshold = 0.3;
  const auto picked = b.select_candidates(cfg);
  ASSERT_EQ(picked.size(), 2u);
  EXPECT_EQ(picked[0].seq, 2u);  // newest first
  EXPECT_EQ(picked[1].seq, 0u);

  ReplayBuffer high(10);
  for (double r : {0.3, 0.9}) high.push(with_reward(r));
  EXPECT_TRUE(high.select_candidates(cfg).empty());

  ReplayBuffer many(1000);
  for (int i = 0; i < 600; ++i) many.push(with_reward(-1.0));
  cfg.max_samples = 512;
  const auto top = many.select_candidates(cfg);
  ASSERT_EQ(top.size(), 512u);
  EXPECT_EQ(top.front().seq, 599u);
  EXPECT_EQ(top.back().seq, 88u);
}

TEST(Buffer, ProcessedAndRefinedAreSkipped) {
  ReplayBuffer b(10);
  b.push(with_reward(-1.0));
  Transition r = with_reward(-1.0);
  r.refined = true;
  b.push(r);
  b.push(with_reward(-1.0));
  EXPECT_TRUE(b.mark_processed(0));
  const auto c = b.select_candidates(RefinementConfig{});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].seq, 2u);
}

TEST(Buffer, ConcurrentAppendAndSample) {
  ReplayBuffer b(256);
  for (int i = 0; i < 64; ++i) b.push(with_reward(0.0));
  std::atomic<bool> stop{false};
  std::thread writer([&] {
    for (int i = 0; i < 5000; ++i) b.push(with_reward(static_cast<double>(i)));
    stop = true;
  });
  std::mt19937_64 rng(2);
  std::size_t draws = 0;
  while (!stop) {
    const auto batch = b.sample(32, rng);
    ASSERT_EQ(batch.size(), 32u);
    ++draws;
  }
  writer.join();
  EXPECT_EQ(b.size(), 256u);
  EXPECT_GT(draws, 0u);
}

TEST(Prompt, FeasibleStateRendersEmptySections) {
  const Environment env = five_bus_env();
  const GridState s = env.reset(0);
  const Transition t = env.step(s, Action::do_nothing());
  const std::string p = build_prompt(t, env.grid(), RefinementConfig{});
  EXPECT_NE(p.find("2. Top-5 overloaded lines"), std::string::npos);
  EXPECT_NE(p.find("threshold: 100%)\n  none"), std::string::npos);
  EXPECT_NE(p.find("Under-voltage nodes (<0.95 pu): none"), std::string::npos);
  EXPECT_NE(p.find("bus_id must be 0 or 1"), std::string::npos);
  const std::string tail(proposal_marker);
  ASSERT_GE(p.size(), tail.size());
  EXPECT_EQ(p.substr(p.size() - tail.size()), tail);
  for (const char* section : {"1. Grid overview", "3. Voltage abnormalities", "4. Crucial substations",
                              "5. Bad action examples", "6. Operational constraints"})
    EXPECT_NE(p.find(section), std::string::npos) << section;
}

TEST(Prompt, OverloadedLineAndBadAction) {
  const Environment env = five_bus_env();
  const GridCase& c = env.grid();
  Transition t = env.step(env.reset(0), Action::do_nothing());
  t.state.solution.line_current[3] = 1.12 * c.lines[3].i_max;
  t.action = Action{{{c.element_index({ElementKind::line_origin, 3}), 1}}};
  t.reward = 0.1;
  const std::string p = build_prompt(t, c, RefinementConfig{});
  EXPECT_NE(p.find("Line 3 (112.0%, moderate)"), std::string::npos) << p;
  EXPECT_NE(p.find("Sub 1 <-> Sub 3"), std::string::npos);
  EXPECT_NE(p.find("Avoid: 3 : 1"), std::string::npos);
  EXPECT_NE(p.find("Reward: 0.1"), std::string::npos);
  t.state.solution.line_current[3] = 1.25 * c.lines[3].i_max;
  EXPECT_NE(build_prompt(t, c, RefinementConfig{}).find("(125.0%, severe)"), std::string::npos);
}

TEST(Prompt, ListsCooldowns) {
  const Environment env = five_bus_env();
  const GridCase& c = env.grid();
  const std::size_t e = c.element_index({ElementKind::line_extremity, 2});
  const Transition first = env.step(env.reset(0), Action{{{e, 1}}});
  const Transition t = env.step(first.next_state, Action::do_nothing());
  const std::string p = build_prompt(t, c, RefinementConfig{});
  EXPECT_NE(p.find("Lines in cooldown: 2\n"), std::string::npos);
  EXPECT_NE(p.find("Remaining steps: 3\n"), std::string::npos);
}

TEST(Parser, Examples) {
  const GridCase c = load_case(fixtures::fourteen_bus_case());
  const AdvisorProposal ok = parse_proposal("...\nproposed LINE changes: {12: 1, 17: 0}", c);
  ASSERT_TRUE(ok.ok());
  EXPECT_EQ(ok.changes, (std::vector<LineChange>{{12, 1}, {17, 0}}));

  const AdvisorProposal bad = parse_proposal("proposed LINE changes: {12: 2}", c);
  EXPECT_FALSE(bad.ok());
  EXPECT_NE(bad.message().find("invalid busbar"), std::string::npos);

  const AdvisorProposal none = parse_proposal("I would rather not say.", c);
  EXPECT_FALSE(none.ok());
  EXPECT_NE(none.message().find("marker absent"), std::string::npos);

  const AdvisorProposal unknown = parse_proposal("proposed LINE changes: {99: 1}", c);
  EXPECT_FALSE(unknown.ok());
  EXPECT_NE(unknown.message().find("unknown line"), std::string::npos);
}

TEST(Parser, UsesLastMarkerAndToleratesQuotes) {
  const GridCase c = load_case(fixtures::fourteen_bus_case());
  const AdvisorProposal p = parse_proposal(
      "Format: proposed LINE changes: {a: b}\nThinking...\nProposed line changes: {\"3\": 1, '4' : 0}\n", c);
  ASSERT_TRUE(p.ok()) << p.message();
  EXPECT_EQ(p.changes, (std::vector<LineChange>{{3, 1}, {4, 0}}));
  const AdvisorProposal partial = parse_proposal("proposed LINE changes: 3 : 1, 4 : 7", c);
  EXPECT_TRUE(partial.ok());
  EXPECT_EQ(partial.changes.size(), 1u);
  EXPECT_EQ(partial.rejections.size(), 1u);
}

TEST(Parser, FormatRoundTrips) {
  const GridCase c = load_case(fixtures::five_bus_case());
  const ActionSpace space(c);
  for (std::size_t i = 1; i < space.size(); ++i) {
    const AdvisorProposal p = parse_proposal(format_proposal(c, space[i]), c);
    ASSERT_TRUE(p.ok());
    const auto a = proposal_to_action(c, p);
    ASSERT_TRUE(a.has_value());
    EXPECT_EQ(space.index_of(c, TopologyState::base(c), *a), i);
  }
}

TEST(Parser, ProposalToActionPicksSharedSubstation) {
  const GridCase c = load_case(fixtures::five_bus_case());
  AdvisorProposal p = parse_proposal("proposed LINE changes: {3: 1, 5: 0}", c);  // both touch substation 3
  auto a = proposal_to_action(c, p);
  ASSERT_TRUE(a.has_value());
  for (const auto& ch : a->changes) EXPECT_EQ(c.element_substation(ch.element), 3u);
  p = parse_proposal("proposed LINE changes: {0: 1, 5: 0}", c);  // no common substation
  EXPECT_FALSE(proposal_to_action(c, p).has_value());
}

TEST(Parser, SurvivesFuzz) {
  const GridCase c = load_case(fixtures::fourteen_bus_case());
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> byte(0, 255), len(0, 80), coin(0, 3);
  const std::string alphabet = "0123456789:{},'\" \n\tabc-+.e";
  std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
  std::size_t oks = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const int n = len(rng);
    const bool structured = coin(rng) != 0;
    if (structured) s = coin(rng) ? "proposed LINE changes:" : "PROPOSED line CHANGES:";
    for (int k = 0; k < n; ++k) s += structured ? alphabet[ch(rng)] : static_cast<char>(byte(rng));
    AdvisorProposal p;
    ASSERT_NO_THROW(p = parse_proposal(s, c)) << i;
    ASSERT_EQ(p.ok(), !p.changes.empty());
    for (const auto& lc : p.changes) {
      ASSERT_LT(lc.line, c.line_count());
      ASSERT_TRUE(lc.busbar == 0 || lc.busbar == 1);
    }
    oks += p.ok();
  }
  EXPECT_GT(oks, 0u);
}

TEST(RuleAdvisor, NoOverloadMeansDoNothing) {
  const Environment env = five_bus_env();
  const ActionSpace space(env.grid());
  const RuleAdvice a = advise_rule_based(env, space, env.reset(0));
  EXPECT_TRUE(a.action.is_do_nothing());
  EXPECT_EQ(a.evaluated, 0u);
}

TEST(RuleAdvisor, MatchesExhaustiveSearch) {
  const Environment env = five_bus_env();
  const ActionSpace space(env.grid());
  const Transition fail = failing_transition(env);
  const GridState& s = fail.state;
  ASSERT_FALSE(s.limits.overloaded_lines.empty());
  const RuleAdvice a = advise_rule_based(env, space, s);
  ASSERT_FALSE(a.action.is_do_nothing());
  // Overloaded lines here are fewer than top_k, so every endpoint is eligible.
  ASSERT_LE(s.limits.overloaded_lines.size(), 5u);
  std::set<std::size_t> ends;
  for (const auto& o : s.limits.overloaded_lines)
    ends.insert(env.grid().lines[o.line].from), ends.insert(env.grid().lines[o.line].to);
  const ExhaustiveBest best = exhaustive_best(env, s, ends);
  EXPECT_GT(best.index, 0u);
  EXPECT_EQ(lookahead_score(env.grid(), env.step(s, a.action).next_state), best.score);
}

TEST(RuleAdvisor, AllExcludedFallsBackToDoNothing) {
  const Environment env = five_bus_env();
  const ActionSpace space(env.grid());
  const Transition fail = failing_transition(env);
  std::vector<Action> all;
  for (std::size_t i = 0; i < space.size(); ++i) all.push_back(space[i]);
  EXPECT_TRUE(advise_rule_based(env, space, fail.state, 5, all).action.is_do_nothing());
}

TEST(Refine, RelievingSplitAcceptedOnFirstRound) {
  const Environment env = five_bus_env();
  const Transition original = failing_transition(env);
  const ExhaustiveBest best = exhaustive_best(env, original.state);
  const ActionSpace space(env.grid());
  MockAdvisor mock({proposal_for(env.grid(), space[best.index])});
  const Transition before = original;
  const RefineResult r = refine(original, mock, env, RefinementConfig{});
  ASSERT_TRUE(r.refined.has_value());
  EXPECT_EQ(r.rounds.size(), 1u);
  EXPECT_GT(r.refined->reward, original.reward);
  EXPECT_TRUE(r.refined->refined);
  Transition again = env.step(original.state, r.refined->action);
  again.refined = true;
  EXPECT_EQ(*r.refined, again);
  EXPECT_EQ(original, before);
}

TEST(Refine, ThreeUnparseableRoundsYieldNothing) {
  const Environment env = five_bus_env();
  const Transition original = failing_transition(env);
  MockAdvisor mock({"no idea", "still no idea", "proposed LINE changes: {}"});
  const RefineResult r = refine(original, mock, env, RefinementConfig{});
  EXPECT_FALSE(r.refined.has_value());
  EXPECT_EQ(r.rounds.size(), 3u);
  EXPECT_EQ(mock.calls(), 3u);
}

TEST(Refine, OriginalActionIsNotAnImprovement) {
  const Environment env = five_bus_env();
  const ActionSpace space(env.grid());
  const GridState s = env.reset(30);
  const Transition original = env.step(s, space[9]);
  RefinementConfig cfg;
  cfg.max_rounds = 1;
  MockAdvisor mock({proposal_for(env.grid(), space[9])});
  const RefineResult r = refine(original, mock, env, cfg);
  EXPECT_FALSE(r.refined.has_value());
  ASSERT_EQ(r.rounds.size(), 1u);
  EXPECT_EQ(r.rounds[0].outcome, "no improvement");
  EXPECT_EQ(r.rounds[0].reward, original.reward);
}

TEST(Refine, AdvisorFailuresAreFailedRounds) {
  const Environment env = five_bus_env();
  ThrowingAdvisor adv;
  const RefineResult r = refine(failing_transition(env), adv, env, RefinementConfig{});
  EXPECT_FALSE(r.refined.has_value());
  ASSERT_EQ(r.rounds.size(), 3u);
  EXPECT_NE(r.rounds[0].outcome.find("advisor failure"), std::string::npos);
}

TEST(Refine, BufferPassKeepsOriginalsAndRespectsThreshold) {
  const Environment env = five_bus_env();
  const auto ts = sample_transitions(env, 300, 17);
  ReplayBuffer b(1000);
  for (const auto& t : ts) b.push(t);
  std::vector<double> rewards;
  for (const auto& t : ts) rewards.push_back(t.reward);
  std::nth_element(rewards.begin(), rewards.begin() + 150, rewards.end());
  RefinementConfig cfg;
  cfg.reward_threshold = rewards[150];
  const auto before = b.snapshot();
  RecordingAdvisor adv("nothing to add");
  const RefinementSummary s = refine_buffer(b, adv, env, cfg);
  EXPECT_EQ(s.refined, 0u);
  EXPECT_GT(adv.seen.size(), 0u);
  for (double r : adv.seen) EXPECT_LT(r, cfg.reward_threshold);
  const auto after = b.snapshot();
  ASSERT_EQ(after.size(), before.size());
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(after[i].transition, before[i].transition);
}

TEST(Refine, RuleAdvisorRefinementsMatchResimulation) {
  const Environment env = five_bus_env();
  const auto ts = sample_transitions(env, 600, 23);
  ReplayBuffer b(2000);
  for (const auto& t : ts) b.push(t);
  RuleAdvisor adv(env.grid());
  const RefinementSummary s = refine_buffer(b, adv, env, RefinementConfig{});
  EXPECT_GT(s.refined, 0u);
  std::size_t checked = 0;
  for (const auto& item : b.snapshot()) {
    if (!item.transition.refined) continue;
    Transition again = env.step(item.transition.state, item.transition.action);
    again.refined = true;
    EXPECT_EQ(item.transition, again);
    ++checked;
  }
  EXPECT_EQ(checked, s.refined);
}
