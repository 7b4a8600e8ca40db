#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridsafe/cli/run_config.hpp"
#include "gridsafe/env/chronics.hpp"
#include "gridsafe/env/environment.hpp"
#include "gridsafe/error.hpp"
#include "gridsafe/eval/report.hpp"
#include "gridsafe/eval/rollout.hpp"
#include "gridsafe/fixtures.hpp"
#include "gridsafe/grid/case.hpp"
#include "gridsafe/io.hpp"
#include "gridsafe/learner/checkpoint.hpp"
#include "gridsafe/learner/safety_sac.hpp"
#include "gridsafe/learner/trainer.hpp"
#include "gridsafe/replay/advisor.hpp"
#include "gridsafe/replay/refine.hpp"

namespace gridsafe::cli {

enum ExitCode { exit_ok = 0, exit_user = 1, exit_numeric = 2, exit_io = 3 };

namespace detail {

inline RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  return parse_run_config(read_text_file(path), overrides, std::filesystem::absolute(path).parent_path());
}

inline Environment make_env(const RunConfig& c) {
  if (c.case_path.empty() || c.chronics_path.empty())
    throw UsageError("config must set paths.case and paths.chronics");
  auto grid = std::make_shared<const GridCase>(load_case(read_text_file(c.case_path)));
  auto ch = std::make_shared<const Chronics>(
      load_chronics(read_text_file(c.chronics_path), *grid, c.step_minutes, c.horizon));
  return Environment(grid, ch, c.env);
}

inline std::unique_ptr<Advisor> make_advisor(const RunConfig& c, const GridCase& grid) {
  switch (c.advisor) {
    case AdvisorKind::off: return nullptr;
    case AdvisorKind::rule: return std::make_unique<RuleAdvisor>(grid, c.refine.top_k);
    case AdvisorKind::mock: return std::make_unique<MockAdvisor>(MockAdvisor::from_directory(c.mock_dir));
    case AdvisorKind::remote: return std::make_unique<RemoteAdvisor>(c.remote);
  }
  return nullptr;
}

inline std::string updates_csv(const std::vector<StepReport>& u, std::size_t every) {
  std::ostringstream o;
  o << "update,loss_r,loss_c,loss_enc,loss_pi,loss_pi_r,loss_pi_c,lambda,mean_qc\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    if ((i + 1) % every != 0 && i + 1 != u.size()) continue;
    const auto& r = u[i];
    o << i + 1;
    for (double v : {r.loss_r, r.loss_c, r.loss_enc, r.loss_pi, r.loss_pi_r, r.loss_pi_c, r.lambda, r.mean_qc})
      o << ',' << gridsafe::detail::g17(v);
    o << '\n';
  }
  return o.str();
}

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline int cmd_train(const RunConfig& cfg, Streams io) {
  const Environment env = make_env(cfg);
  const std::string echo = echo_run_config(cfg);
  const std::string fp = config_fingerprint(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  write_text_file(cfg.output_dir / "config.ini", echo);
  RunReport all;
  all.fingerprint = fp;
  for (const std::uint64_t seed : cfg.seeds) {
    const auto dir = cfg.output_dir / ("seed_" + std::to_string(seed));
    std::filesystem::create_directories(dir);
    SafetySac learner(env.grid(), cfg.env, cfg.learner, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    auto advisor = make_advisor(cfg, env.grid());
    TrainHooks hooks;
    hooks.checkpoint = [&](std::uint64_t step, const SafetySac& l) {
      write_text_file(dir / ("checkpoint_" + std::to_string(step) + ".json"), save_checkpoint(l));
    };
    const TrainResult res = train(env, learner, tc, advisor.get(), cfg.refine, hooks);
    write_text_file(dir / "checkpoint.json", save_checkpoint(learner));
    write_text_file(dir / "curves.csv", curves_csv(res.curve));
    write_text_file(dir / "curves.svg", curves_svg(res.curve, "config " + fp + " seed " + std::to_string(seed)));
    write_text_file(dir / "updates.csv", updates_csv(res.updates, 100));

    RolloutOptions ro;
    ro.episodes = cfg.eval_episodes;
    ro.seed = seed;
    ro.stride = cfg.eval_stride;
    ro.label = "seed_" + std::to_string(seed);
    ro.weights = cfg.weights;
    RunReport r = rollout(env, greedy_policy(learner), ro);
    r.fingerprint = fp;
    write_text_file(dir / "metrics.csv", report_csv(r));
    all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
    all.skipped += r.skipped;
    const ReportAggregate a = aggregate(r);
    io.out << "seed " << seed << ": episodes " << res.episodes << ", updates " << res.updates.size()
           << ", refined " << res.refinement.refined << "/" << res.refinement.candidates << ", lambda "
           << learner.lambda() << ", survival " << a.mean.survival_step << ", safety cost "
           << a.mean.safety_cost_metric << "\n";
  }
  write_text_file(cfg.output_dir / "metrics.csv", report_csv(all));
  io.out << "wrote " << cfg.output_dir.string() << " (fingerprint " << fp << ")\n";
  return exit_ok;
}

inline int cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, const std::string& policy,
                    Streams io) {
  const Environment env = make_env(cfg);
  const std::string fp = config_fingerprint(cfg);
  const ActionSpace space(env.grid());
  std::optional<SafetySac> learner;
  Policy p;
  if (policy == "learner") {
    if (checkpoint.empty()) throw UsageError("eval --policy learner needs --checkpoint");
    learner.emplace(env.grid(), cfg.env, cfg.learner, cfg.seeds.front());
    load_checkpoint(read_text_file(checkpoint), *learner);
    p = greedy_policy(*learner);
  } else if (policy == "do-nothing") {
    p = [](const GridState&) { return Action::do_nothing(); };
  } else if (policy == "rule") {
    p = [&](const GridState& s) { return advise_rule_based(env, space, s, cfg.refine.top_k).action; };
  } else {
    throw UsageError("unknown policy '" + policy + "' (learner, do-nothing, rule)");
  }
  std::filesystem::create_directories(cfg.output_dir);
  write_text_file(cfg.output_dir / "config.ini", echo_run_config(cfg));
  RunReport all;
  all.fingerprint = fp;
  for (const std::uint64_t seed : cfg.seeds) {
    RolloutOptions ro;
    ro.episodes = cfg.eval_episodes;
    ro.seed = seed;
    ro.stride = cfg.eval_stride;
    ro.label = policy;
    ro.weights = cfg.weights;
    const RunReport r = rollout(env, p, ro);
    all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
    all.skipped += r.skipped;
  }
  write_text_file(cfg.output_dir / "eval_metrics.csv", report_csv(all));
  const ReportAggregate a = aggregate(all);
  io.out << policy << ": " << all.rows.size() << " episodes (" << all.skipped << " skipped), survival "
         << a.mean.survival_step << ", reward " << a.mean.cumulative_reward << ", overload "
         << a.mean.overload_rate << "%, violation " << a.mean.violation_rate << "%, safety cost "
         << a.mean.safety_cost_metric << "\n";
  return exit_ok;
}

/// Fills a buffer with do-nothing episodes, then refines it once and prints
/// every advisor round.
inline int cmd_refine_demo(const RunConfig& cfg, std::size_t steps, std::size_t show, Streams io) {
  const Environment env = make_env(cfg);
  auto advisor = make_advisor(cfg, env.grid());
  if (!advisor) throw UsageError("refine-demo needs refine.advisor other than off");
  ReplayBuffer buffer(std::max<std::size_t>(steps, 1));
  const auto offsets = episode_offsets(env, cfg.eval_stride);
  if (offsets.empty()) throw UsageError("chronics too short for one episode");
  std::size_t e = 0;
  GridState s = env.reset(offsets[0]);
  for (std::size_t k = 0; k < steps; ++k) {
    Transition t = env.step(s, Action::do_nothing());
    s = t.next_state.terminal ? env.reset(offsets[++e % offsets.size()]) : t.next_state;
    buffer.push(std::move(t));
  }
  const auto candidates = buffer.select_candidates(cfg.refine);
  io.out << "buffer " << buffer.size() << ", candidates " << candidates.size() << "\n";
  std::size_t shown = 0, accepted = 0;
  for (const auto& item : candidates) {
    const RefineResult r = refine(item.transition, *advisor, env, cfg.refine);
    accepted += r.refined ? 1 : 0;
    if (shown++ >= show) continue;
    io.out << "\n=== transition " << item.seq << " (t " << item.transition.state.t << ", reward "
           << item.transition.reward << ")\n";
    for (std::size_t k = 0; k < r.rounds.size(); ++k) {
      const auto& rd = r.rounds[k];
      if (k == 0) io.out << "--- prompt\n" << rd.prompt << "\n";
      io.out << "--- round " << k + 1 << " response\n" << rd.response << "\n--- outcome: " << rd.outcome;
      if (rd.reward) io.out << " (reward " << *rd.reward << ")";
      io.out << "\n";
    }
  }
  io.out << "\naccepted " << accepted << " of " << candidates.size() << "\n";
  return exit_ok;
}

inline int cmd_pf_check(const std::filesystem::path& case_path, const std::filesystem::path& chronics_path,
                        double step_minutes, std::size_t row, Streams io) {
  auto grid = std::make_shared<const GridCase>(load_case(read_text_file(case_path)));
  auto ch = std::make_shared<const Chronics>(load_chronics(read_text_file(chronics_path), *grid, step_minutes));
  const Environment env(grid, ch, EnvConfig{});
  const GridState s = env.reset(row);
  const auto& sol = s.solution;
  io.out << "converged " << (sol.converged() ? "yes" : "no") << ", iterations " << sol.iterations
         << ", max mismatch " << sol.mismatch_norm << " p.u.\n";
  io.out << "C_v " << s.limits.voltage_violation_fraction << ", C_l " << s.limits.overload_fraction << "\n";
  for (std::size_t k = 0; k < sol.voltage_magnitude.size(); ++k)
    io.out << "node " << k << " (sub " << grid->substations[sol.node_substation[k]].id << ") V "
           << sol.voltage_magnitude[k] << " angle " << sol.voltage_angle[k] << "\n";
  const auto rho = line_loading(*grid, sol);
  for (std::size_t l = 0; l < grid->lines.size(); ++l)
    io.out << "line " << grid->lines[l].id << " flow " << sol.line_flow_p[l] << " MW, loading " << 100.0 * rho[l]
           << "%\n";
  for (const auto& v : s.limits.violating_buses)
    io.out << "voltage violation at bus " << grid->buses[v.bus].id << ": " << v.voltage << "\n";
  for (const auto& o : s.limits.overloaded_lines)
    io.out << "overload on line " << grid->lines[o.line].id << ": " << o.usage_percent << "%\n";
  return exit_ok;
}

inline int cmd_gen_fixtures(const std::filesystem::path& dir, Streams io) {
  std::filesystem::create_directories(dir);
  const GridCase five = load_case(fixtures::five_bus_case());
  write_text_file(dir / "case5.json", fixtures::five_bus_case());
  write_text_file(dir / "chronics5.csv", dump_chronics(fixtures::five_bus_chronics(five), five));
  write_text_file(dir / "desk.ini", fixtures::five_bus_config());
  write_text_file(dir / "case2.json", fixtures::two_bus_case());
  write_text_file(dir / "case14.json", fixtures::fourteen_bus_case());
  write_text_file(dir / "chronics14.csv", fixtures::fourteen_bus_chronics());
  io.out << "wrote fixtures to " << dir.string() << "\n";
  return exit_ok;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"gridsafe: safe topology control for power grids"};
  app.require_subcommand(1);
  detail::Streams io{out, err};

  std::string config_path, checkpoint, policy = "learner", case_path, chronics_path, out_dir;
  std::vector<std::string> overrides;
  std::size_t demo_steps = 600, demo_show = 2, row = 0;
  double step_minutes = 5.0;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "INI run configuration")->required();
    sub->add_option("--set", overrides, "override, section.key=value (repeatable)");
    sub->add_option("-o,--output", out_dir, "output directory (overrides paths.output)");
  };
  auto* train = app.add_subcommand("train", "train one learner per seed and evaluate it");
  add_config(train);
  auto* eval = app.add_subcommand("eval", "seeded greedy rollouts of a checkpoint or baseline");
  add_config(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint JSON written by train");
  eval->add_option("--policy", policy, "learner, do-nothing or rule");
  auto* demo = app.add_subcommand("refine-demo", "show advisor prompts, proposals and outcomes");
  add_config(demo);
  demo->add_option("--steps", demo_steps, "do-nothing interactions to collect");
  demo->add_option("--show", demo_show, "transitions to print in full");
  auto* pf = app.add_subcommand("pf-check", "solve the power flow at one chronics row");
  pf->add_option("--case", case_path, "case JSON")->required();
  pf->add_option("--chronics", chronics_path, "chronics CSV")->required();
  pf->add_option("--step-minutes", step_minutes, "chronics step duration");
  pf->add_option("--row", row, "chronics row");
  auto* gen = app.add_subcommand("gen-fixtures", "write the bundled cases, chronics and desk config");
  gen->add_option("dir", out_dir, "target directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return exit_user;
  }

  try {
    auto config = [&] {
      std::vector<std::string> ov = overrides;
      // -o is relative to the working directory, not the INI file
      if (!out_dir.empty()) ov.push_back("paths.output=" + std::filesystem::absolute(out_dir).string());
      return detail::load_run_config(config_path, ov);
    };
    if (*train) return detail::cmd_train(config(), io);
    if (*eval) return detail::cmd_eval(config(), checkpoint, policy, io);
    if (*demo) return detail::cmd_refine_demo(config(), demo_steps, demo_show, io);
    if (*pf) return detail::cmd_pf_check(case_path, chronics_path, step_minutes, row, io);
    if (*gen) return detail::cmd_gen_fixtures(out_dir, io);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.category()) {
      case Error::Category::user: return exit_user;
      case Error::Category::numeric: return exit_numeric;
      case Error::Category::io: return exit_io;
    }
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_io;
  }
  return exit_user;
}

}  // namespace gridsafe::cli
