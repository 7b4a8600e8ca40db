#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gridsafe/env/environment.hpp"
#include "gridsafe/error.hpp"
#include "gridsafe/eval/metrics.hpp"
#include "gridsafe/learner/safety_sac.hpp"
#include "gridsafe/learner/trainer.hpp"
#include "gridsafe/replay/advisor.hpp"
#include "gridsafe/replay/buffer.hpp"

namespace gridsafe {

enum class AdvisorKind { off, rule, remote, mock };

inline const char* to_string(AdvisorKind k) {
  switch (k) {
    case AdvisorKind::off: return "off";
    case AdvisorKind::rule: return "rule";
    case AdvisorKind::remote: return "remote";
    case AdvisorKind::mock: return "mock";
  }
  return "?";
}

struct RunConfig {
  std::filesystem::path case_path, chronics_path, output_dir = "out", mock_dir;
  double step_minutes = 5.0;
  std::size_t horizon = 0;
  EnvConfig env;
  SacConfig learner;
  TrainConfig train;
  RefinementConfig refine;
  AdvisorKind advisor = AdvisorKind::off;
  RemoteAdvisorConfig remote;
  std::size_t eval_episodes = 5;
  std::size_t eval_stride = 288;
  MetricWeights weights;
  std::vector<std::uint64_t> seeds = {0};

  void validate() const {
    env.validate();
    learner.validate();
    train.validate();
    refine.validate();
    if (!(step_minutes > 0)) throw InvariantError("chronics.step_minutes must be > 0");
    if (advisor == AdvisorKind::remote && remote.endpoint.empty())
      throw InvariantError("refine.advisor = remote requires refine.endpoint");
    if (advisor == AdvisorKind::mock && mock_dir.empty())
      throw InvariantError("refine.advisor = mock requires refine.mock_dir");
    if (!(remote.timeout_seconds > 0)) throw InvariantError("refine.timeout must be > 0");
    if (eval_episodes == 0) throw InvariantError("eval.episodes must be >= 1");
    if (seeds.empty()) throw InvariantError("run.seeds must list at least one seed");
    if (env.history_length < learner.n_hist) throw InvariantError("learner.n_hist exceeds env.history_length");
  }
};

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T get_value(const boost::property_tree::ptree& pt, const std::string& key, T fallback) {
  const auto v = pt.get_optional<std::string>(key);
  if (!v) return fallback;
  std::istringstream in(*v);
  T out{};
  if constexpr (std::is_same_v<T, bool>) {
    std::string s;
    in >> s;
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ParseError("config key " + key + ": expected a boolean, got '" + *v + "'");
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!v->empty() && v->front() == '-') throw ParseError("config key " + key + ": must be >= 0");
    in >> out;
  } else {
    in >> out;
  }
  if (!in.fail() && !in.eof()) in >> std::ws;
  if (in.fail() || !in.eof()) throw ParseError("config key " + key + ": cannot parse '" + *v + "'");
  return out;
}

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "paths.case", "paths.chronics", "paths.output",
      "chronics.step_minutes", "chronics.horizon",
      "env.penalty", "env.alpha_v", "env.alpha_l", "env.kappa", "env.max_episode_length", "env.cooldown_steps",
      "env.overflow_trip_steps", "env.hard_overflow_ratio", "env.failure_reward", "env.history_length",
      "env.pf_tolerance", "env.pf_max_iterations",
      "learner.gamma", "learner.alpha", "learner.beta", "learner.epsilon_c", "learner.soft_rate",
      "learner.lr_actor", "learner.lr_critic", "learner.lr_lambda", "learner.lr_encoder", "learner.lambda_init",
      "learner.freeze_lambda", "learner.hidden", "learner.latent", "learner.n_hist", "learner.dropout",
      "learner.batch_size", "learner.alpha_v", "learner.alpha_l",
      "train.total_steps", "train.warmup", "train.buffer_capacity", "train.episode_stride", "train.eval_every",
      "train.eval_episodes", "train.checkpoint_every",
      "refine.advisor", "refine.r_thr", "refine.period", "refine.max_rounds", "refine.max_samples", "refine.top_k",
      "refine.overload_threshold", "refine.v_low", "refine.v_high", "refine.endpoint", "refine.model",
      "refine.timeout", "refine.token_env", "refine.mock_dir",
      "eval.episodes", "eval.stride", "eval.overload_weight", "eval.violation_weight",
      "run.seeds"};
  return keys;
}

}  // namespace detail

/// Applies a "section.key=value" override to a property tree.
inline void apply_override(boost::property_tree::ptree& pt, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ParseError("override '" + assignment + "' is not section.key=value");
  const std::string key = assignment.substr(0, eq);
  const auto& keys = detail::known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ParseError("unknown config key '" + key + "'");
  pt.put(key, assignment.substr(eq + 1));
}

/// Builds a RunConfig from INI text plus overrides. Relative paths resolve
/// against `base_dir`.
inline RunConfig parse_run_config(const std::string& ini_text, const std::vector<std::string>& overrides = {},
                                  const std::filesystem::path& base_dir = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  const auto& keys = detail::known_keys();
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ParseError("config key '" + section + "' must sit inside a section");
    for (const auto& [key, _] : body) {
      const std::string full = section + "." + key;
      if (std::find(keys.begin(), keys.end(), full) == keys.end())
        throw ParseError("unknown config key '" + full + "'");
    }
  }
  for (const auto& o : overrides) apply_override(tree, o);

  using detail::get_value;
  RunConfig c;
  auto path = [&](const char* key, const std::filesystem::path& fallback) {
    const auto v = tree.get_optional<std::string>(key);
    const std::filesystem::path p = v ? std::filesystem::path(*v) : fallback;
    return !p.empty() && p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  c.case_path = path("paths.case", {});
  c.chronics_path = path("paths.chronics", {});
  c.output_dir = path("paths.output", c.output_dir);
  c.step_minutes = get_value(tree, "chronics.step_minutes", c.step_minutes);
  c.horizon = get_value(tree, "chronics.horizon", c.horizon);

  EnvConfig& e = c.env;
  e.penalty = get_value(tree, "env.penalty", e.penalty);
  e.alpha_v = get_value(tree, "env.alpha_v", e.alpha_v);
  e.alpha_l = get_value(tree, "env.alpha_l", e.alpha_l);
  e.kappa = get_value(tree, "env.kappa", e.kappa);
  e.max_episode_length = get_value(tree, "env.max_episode_length", e.max_episode_length);
  e.cooldown_steps = get_value(tree, "env.cooldown_steps", e.cooldown_steps);
  e.overflow_trip_steps = get_value(tree, "env.overflow_trip_steps", e.overflow_trip_steps);
  e.hard_overflow_ratio = get_value(tree, "env.hard_overflow_ratio", e.hard_overflow_ratio);
  e.failure_reward = get_value(tree, "env.failure_reward", e.failure_reward);
  e.history_length = get_value(tree, "env.history_length", e.history_length);
  e.power_flow.tolerance = get_value(tree, "env.pf_tolerance", e.power_flow.tolerance);
  e.power_flow.max_iterations = get_value(tree, "env.pf_max_iterations", e.power_flow.max_iterations);

  SacConfig& l = c.learner;
  l.gamma = get_value(tree, "learner.gamma", l.gamma);
  l.alpha = get_value(tree, "learner.alpha", l.alpha);
  l.beta = get_value(tree, "learner.beta", l.beta);
  l.epsilon_c = get_value(tree, "learner.epsilon_c", l.epsilon_c);
  l.soft_rate = get_value(tree, "learner.soft_rate", l.soft_rate);
  l.lr_actor = get_value(tree, "learner.lr_actor", l.lr_actor);
  l.lr_critic = get_value(tree, "learner.lr_critic", l.lr_critic);
  l.lr_lambda = get_value(tree, "learner.lr_lambda", l.lr_lambda);
  l.lr_encoder = get_value(tree, "learner.lr_encoder", l.lr_encoder);
  l.lambda_init = get_value(tree, "learner.lambda_init", l.lambda_init);
  l.freeze_lambda = get_value(tree, "learner.freeze_lambda", l.freeze_lambda);
  l.hidden = get_value(tree, "learner.hidden", l.hidden);
  l.latent = get_value(tree, "learner.latent", l.latent);
  l.n_hist = get_value(tree, "learner.n_hist", l.n_hist);
  l.dropout = get_value(tree, "learner.dropout", l.dropout);
  l.batch_size = get_value(tree, "learner.batch_size", l.batch_size);
  l.alpha_v = get_value(tree, "learner.alpha_v", e.alpha_v);
  l.alpha_l = get_value(tree, "learner.alpha_l", e.alpha_l);

  TrainConfig& t = c.train;
  t.total_steps = get_value(tree, "train.total_steps", t.total_steps);
  t.warmup = get_value(tree, "train.warmup", t.warmup);
  t.buffer_capacity = get_value(tree, "train.buffer_capacity", t.buffer_capacity);
  t.episode_stride = get_value(tree, "train.episode_stride", t.episode_stride);
  t.eval_every = get_value(tree, "train.eval_every", t.eval_every);
  t.eval_episodes = get_value(tree, "train.eval_episodes", t.eval_episodes);
  t.checkpoint_every = get_value(tree, "train.checkpoint_every", t.checkpoint_every);

  RefinementConfig& r = c.refine;
  const std::string adv = get_value<std::string>(tree, "refine.advisor", "off");
  if (adv == "off") c.advisor = AdvisorKind::off;
  else if (adv == "rule") c.advisor = AdvisorKind::rule;
  else if (adv == "remote") c.advisor = AdvisorKind::remote;
  else if (adv == "mock") c.advisor = AdvisorKind::mock;
  else throw ParseError("refine.advisor must be off, rule, remote or mock (got '" + adv + "')");
  r.reward_threshold = get_value(tree, "refine.r_thr", r.reward_threshold);
  r.period = get_value(tree, "refine.period", r.period);
  r.max_rounds = get_value(tree, "refine.max_rounds", r.max_rounds);
  r.max_samples = get_value(tree, "refine.max_samples", r.max_samples);
  r.top_k = get_value(tree, "refine.top_k", r.top_k);
  r.overload_threshold = get_value(tree, "refine.overload_threshold", r.overload_threshold);
  r.v_low = get_value(tree, "refine.v_low", r.v_low);
  r.v_high = get_value(tree, "refine.v_high", r.v_high);
  c.remote.endpoint = tree.get<std::string>("refine.endpoint", "");
  c.remote.model = tree.get<std::string>("refine.model", "");
  c.remote.timeout_seconds = get_value(tree, "refine.timeout", c.remote.timeout_seconds);
  c.remote.token_env = tree.get<std::string>("refine.token_env", c.remote.token_env);
  c.mock_dir = path("refine.mock_dir", {});

  c.eval_episodes = get_value(tree, "eval.episodes", c.eval_episodes);
  c.eval_stride = get_value(tree, "eval.stride", c.eval_stride);
  c.weights.overload = get_value(tree, "eval.overload_weight", c.weights.overload);
  c.weights.violation = get_value(tree, "eval.violation_weight", c.weights.violation);

  if (const auto s = tree.get_optional<std::string>("run.seeds")) {
    c.seeds.clear();
    std::istringstream list(*s);
    std::string item;
    while (std::getline(list, item, ',')) {
      std::istringstream one(item);
      std::uint64_t v = 0;
      if (!(one >> v) || !(one >> std::ws).eof()) throw ParseError("run.seeds: cannot parse '" + item + "'");
      c.seeds.push_back(v);
    }
  }
  c.validate();
  return c;
}

/// Fully resolved configuration as INI text. Parsing it back yields the
/// same RunConfig.
inline std::string echo_run_config(const RunConfig& c) {
  using detail::num;
  std::ostringstream o;
  const auto& e = c.env;
  const auto& l = c.learner;
  const auto& t = c.train;
  const auto& r = c.refine;
  o << "[paths]\ncase = " << c.case_path.string() << "\nchronics = " << c.chronics_path.string()
    << "\noutput = " << c.output_dir.string() << "\n\n";
  o << "[chronics]\nstep_minutes = " << num(c.step_minutes) << "\nhorizon = " << c.horizon << "\n\n";
  o << "[env]\npenalty = " << num(e.penalty) << "\nalpha_v = " << num(e.alpha_v) << "\nalpha_l = " << num(e.alpha_l)
    << "\nkappa = " << num(e.kappa) << "\nmax_episode_length = " << e.max_episode_length
    << "\ncooldown_steps = " << e.cooldown_steps << "\noverflow_trip_steps = " << e.overflow_trip_steps
    << "\nhard_overflow_ratio = " << num(e.hard_overflow_ratio) << "\nfailure_reward = " << num(e.failure_reward)
    << "\nhistory_length = " << e.history_length << "\npf_tolerance = " << num(e.power_flow.tolerance)
    << "\npf_max_iterations = " << e.power_flow.max_iterations << "\n\n";
  o << "[learner]\ngamma = " << num(l.gamma) << "\nalpha = " << num(l.alpha) << "\nbeta = " << num(l.beta)
    << "\nepsilon_c = " << num(l.epsilon_c) << "\nsoft_rate = " << num(l.soft_rate)
    << "\nlr_actor = " << num(l.lr_actor) << "\nlr_critic = " << num(l.lr_critic)
    << "\nlr_lambda = " << num(l.lr_lambda) << "\nlr_encoder = " << num(l.lr_encoder)
    << "\nlambda_init = " << num(l.lambda_init) << "\nfreeze_lambda = " << (l.freeze_lambda ? "true" : "false")
    << "\nhidden = " << l.hidden << "\nlatent = " << l.latent << "\nn_hist = " << l.n_hist
    << "\ndropout = " << num(l.dropout) << "\nbatch_size = " << l.batch_size << "\nalpha_v = " << num(l.alpha_v)
    << "\nalpha_l = " << num(l.alpha_l) << "\n\n";
  o << "[train]\ntotal_steps = " << t.total_steps << "\nwarmup = " << t.warmup
    << "\nbuffer_capacity = " << t.buffer_capacity << "\nepisode_stride = " << t.episode_stride
    << "\neval_every = " << t.eval_every << "\neval_episodes = " << t.eval_episodes
    << "\ncheckpoint_every = " << t.checkpoint_every << "\n\n";
  o << "[refine]\nadvisor = " << to_string(c.advisor) << "\nr_thr = " << num(r.reward_threshold)
    << "\nperiod = " << r.period << "\nmax_rounds = " << r.max_rounds << "\nmax_samples = " << r.max_samples
    << "\ntop_k = " << r.top_k << "\noverload_threshold = " << num(r.overload_threshold)
    << "\nv_low = " << num(r.v_low) << "\nv_high = " << num(r.v_high) << "\nendpoint = " << c.remote.endpoint
    << "\nmodel = " << c.remote.model << "\ntimeout = " << num(c.remote.timeout_seconds)
    << "\ntoken_env = " << c.remote.token_env << "\nmock_dir = " << c.mock_dir.string() << "\n\n";
  o << "[eval]\nepisodes = " << c.eval_episodes << "\nstride = " << c.eval_stride
    << "\noverload_weight = " << num(c.weights.overload) << "\nviolation_weight = " << num(c.weights.violation)
    << "\n\n";
  o << "[run]\nseeds = ";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) o << (i ? "," : "") << c.seeds[i];
  o << "\n";
  return o.str();
}

/// 64-bit FNV-1a of the echoed config, as hex. The output directory is left
/// out so a rerun into another directory keeps the same fingerprint.
inline std::string config_fingerprint(RunConfig c) {
  c.output_dir.clear();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : echo_run_config(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gridsafe
