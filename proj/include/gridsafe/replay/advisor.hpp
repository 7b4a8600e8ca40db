#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "gridsafe/env/environment.hpp"
#include "gridsafe/error.hpp"
#include "gridsafe/replay/buffer.hpp"
#include "gridsafe/replay/proposal.hpp"

namespace gridsafe {

struct AdvisorRequest {
  const std::string& prompt;
  const Transition& transition;
  const Environment& env;
  int round = 0;                    // 0-based
  const std::vector<Action>& tried;  // proposals already rejected for this transition
};

/// Produces the free-text answer for one refinement round. Transport
/// failures throw IoError.
class Advisor {
 public:
  virtual ~Advisor() = default;
  virtual std::string respond(const AdvisorRequest& request) = 0;
};

namespace detail {

/// Overload excess and worst loading, the lookahead score (lower is better).
inline std::pair<double, double> overload_score(const GridCase& c, const GridState& s) {
  const auto rho = line_loading(c, s.solution);
  double excess = 0.0, worst = 0.0;
  for (double r : rho) excess += std::max(0.0, r - 1.0), worst = std::max(worst, r);
  return {excess, worst};
}

}  // namespace detail

struct RuleAdvice {
  Action action;  // do-nothing when no candidate improves
  std::optional<std::size_t> action_index;
  std::size_t evaluated = 0;
};

/// One-step lookahead over enumerated single-substation actions at the
/// endpoints of the top_k most loaded overloaded lines. The best
/// non-terminal candidate by (overload excess, max loading) wins if it beats
/// doing nothing.
inline RuleAdvice advise_rule_based(const Environment& env, const ActionSpace& space, const GridState& state,
                                    std::size_t top_k = 5, const std::vector<Action>& exclude = {}) {
  const GridCase& c = env.grid();
  RuleAdvice out;
  if (state.terminal || state.limits.overloaded_lines.empty()) return out;

  std::vector<std::pair<double, std::size_t>> ranked;
  const auto rho = line_loading(c, state.solution);
  for (std::size_t j = 0; j < c.line_count(); ++j)
    if (rho[j] > 1.0) ranked.push_back({-rho[j], j});
  std::sort(ranked.begin(), ranked.end());
  if (ranked.size() > top_k) ranked.resize(top_k);
  std::set<std::size_t> subs;
  for (const auto& [_, j] : ranked) subs.insert(c.lines[j].from), subs.insert(c.lines[j].to);

  const Transition idle = env.step(state, Action::do_nothing());
  auto best = idle.next_state.failed() ? std::pair{1e300, 1e300} : detail::overload_score(c, idle.next_state);
  for (std::size_t i = 1; i < space.size(); ++i) {
    const auto sub = space.substation(i);
    if (!sub || !subs.count(*sub)) continue;
    const Action& a = space[i];
    if (std::find(exclude.begin(), exclude.end(), a) != exclude.end()) continue;
    if (!validate_action(c, state.topology, a).accepted()) continue;
    const Transition t = env.step(state, a);
    ++out.evaluated;
    if (t.next_state.failed()) continue;
    const auto score = detail::overload_score(c, t.next_state);
    if (score < best) {
      best = score;
      out.action = a;
      out.action_index = i;
    }
  }
  return out;
}

/// Lookahead advisor answering in the proposal syntax.
class RuleAdvisor : public Advisor {
 public:
  RuleAdvisor(const GridCase& c, std::size_t top_k = 5) : space_(c), top_k_(top_k) {}

  std::string respond(const AdvisorRequest& req) override {
    const RuleAdvice advice = advise_rule_based(req.env, space_, req.transition.state, top_k_, req.tried);
    if (advice.action.is_do_nothing()) {
      // A switching action that collapsed the grid: propose holding that
      // substation's line ends where they were.
      const Transition& t = req.transition;
      if (!t.next_state.failed() || t.action.is_do_nothing()) return std::string(proposal_marker) + " {}";
      const GridCase& c = req.env.grid();
      const std::size_t sub = c.element_substation(t.action.changes.front().element);
      Action keep;
      for (std::size_t e : c.substation_elements(sub)) {
        const ElementKind k = c.element_ref(e).kind;
        if (k == ElementKind::line_origin || k == ElementKind::line_extremity)
          keep.changes.push_back({e, t.state.topology.element_busbar[e]});
      }
      if (keep.is_do_nothing() || std::find(req.tried.begin(), req.tried.end(), keep) != req.tried.end())
        return std::string(proposal_marker) + " {}";
      return "Hold the current topology.\n" + format_proposal(c, keep);
    }
    return "Lookahead over " + std::to_string(advice.evaluated) + " candidates.\n" +
           format_proposal(req.env.grid(), advice.action);
  }

 private:
  ActionSpace space_;
  std::size_t top_k_;
};

/// Replays canned responses in order, cycling.
class MockAdvisor : public Advisor {
 public:
  explicit MockAdvisor(std::vector<std::string> responses) : responses_(std::move(responses)) {
    if (responses_.empty()) throw InvariantError("mock advisor needs at least one response");
  }

  /// Every regular file in `dir`, sorted by name.
  static MockAdvisor from_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir, ec))
      if (e.is_regular_file()) files.push_back(e.path());
    if (ec) throw IoError("mock advisor directory " + dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    std::vector<std::string> texts;
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      if (!in) throw IoError("cannot read " + f.string());
      std::ostringstream ss;
      ss << in.rdbuf();
      texts.push_back(ss.str());
    }
    if (texts.empty()) throw IoError("mock advisor directory " + dir.string() + " has no response files");
    return MockAdvisor(std::move(texts));
  }

  std::string respond(const AdvisorRequest&) override {
    const std::string& r = responses_[next_ % responses_.size()];
    ++next_;
    return r;
  }

  std::size_t calls() const { return next_; }

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
};

struct RemoteAdvisorConfig {
  std::string endpoint;  // http://host:port/path
  std::string model;
  double timeout_seconds = 30.0;
  std::string token_env = "GRIDSAFE_ADVISOR_TOKEN";
};

/// POSTs {"model", "prompt"} as JSON and returns the response body.
class RemoteAdvisor : public Advisor {
 public:
  explicit RemoteAdvisor(RemoteAdvisorConfig cfg) : cfg_(std::move(cfg)) {
    const auto scheme = cfg_.endpoint.find("://");
    if (scheme == std::string::npos) throw InvariantError("advisor endpoint must look like http://host:port/path");
    const auto slash = cfg_.endpoint.find('/', scheme + 3);
    host_ = cfg_.endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : cfg_.endpoint.substr(slash);
  }

  std::string respond(const AdvisorRequest& req) override {
    httplib::Client client(host_);
    const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
    const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (const char* token = std::getenv(cfg_.token_env.c_str()); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
    const nlohmann::json body = {{"model", cfg_.model}, {"prompt", req.prompt}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw IoError("advisor request to " + cfg_.endpoint + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw IoError("advisor " + cfg_.endpoint + " answered HTTP " + std::to_string(res->status));
    return res->body;
  }

 private:
  RemoteAdvisorConfig cfg_;
  std::string host_, path_;
};

}  // namespace gridsafe
