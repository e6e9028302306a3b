// Command-line harness: train / eval / gradcheck / tinycmdp / export.
//
// Exit codes: 0 success, 1 a verification or acceptance-style check failed,
// 2 usage or I/O errors (bad arguments, unreadable files, malformed config).

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "catrl/checkpoint.hpp"
#include "catrl/config.hpp"
#include "catrl/eval.hpp"
#include "catrl/metrics.hpp"
#include "catrl/ppo.hpp"
#include "catrl/sim.hpp"
#include "catrl/tinycmdp.hpp"
#include "catrl/verify.hpp"

namespace fs = std::filesystem;
using namespace catrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

FullConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  ordered_json j;
  try {
    j = ordered_json::parse(is);
  } catch (const std::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return load_config(j);
}

std::string checkpoint_name(int iteration) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "checkpoint_%06d.ckpt", iteration);
  return buf;
}

int cmd_train(const std::string& config_path, const std::string& out_override) {
  FullConfig cfg = load_config_file(config_path);
  if (!out_override.empty()) cfg.output.directory = out_override;
  const fs::path run_dir(cfg.output.directory);
  fs::create_directories(run_dir);
  {
    std::ofstream os(run_dir / "config.json", std::ios::trunc);
    os << dump_config(cfg).dump(2) << "\n";
  }

  const std::uint64_t seed = cfg.learner.seed;
  ActorCritic net(make_shape(cfg), derive_seed(seed, 0, kNetInitSalt));
  std::vector<LunaEnv> envs;
  envs.reserve(cfg.learner.num_envs);
  for (int e = 0; e < cfg.learner.num_envs; ++e)
    envs.push_back(make_env(cfg, derive_seed(seed, e, kEnvSalt)));
  RolloutCollector<LunaEnv> collector(std::move(envs),
                                      derive_seed(seed, 0, kActionSalt));
  ObservationNormalizer norm(LunaEnv::kObsDim, cfg.learner.normalize_observations);
  Trainer<LunaEnv> trainer(std::move(net), std::move(collector),
                           make_engine(cfg), std::move(norm), cfg.learner);

  std::vector<std::string> names;
  for (const auto& spec : trainer.engine().specs()) names.push_back(spec.name);
  MetricsWriter metrics((run_dir / cfg.output.metrics_file).string(), names);

  const int report_every = std::max(1, cfg.learner.iterations / 100);
  while (!trainer.done()) {
    const IterationLog log = trainer.iterate();
    metrics.write(log);
    const int done_now = trainer.completed_iterations();
    if (cfg.output.checkpoint_every > 0 &&
        done_now % cfg.output.checkpoint_every == 0 && !trainer.done())
      save_checkpoint((run_dir / checkpoint_name(done_now)).string(),
                      trainer.net(), trainer.normalizer(), trainer.progress());
    if (done_now % report_every == 0 || trainer.done())
      std::printf(
          "iter %5d  reward %8.4f  task %6.4f  delta %6.4f  pos_err %6.3f  "
          "rot_err %6.3f  hard %d\n",
          log.iteration, log.rollout.mean_raw_reward,
          log.rollout.mean_task_reward, log.rollout.mean_delta,
          log.rollout.mean_pos_error, log.rollout.mean_rot_error,
          log.rollout.hard_terminations);
    if (log.update.aborted)
      std::fprintf(stderr,
                   "iter %d: non-finite update, parameters rolled back\n",
                   log.iteration);
  }
  const fs::path final_path = run_dir / "checkpoint_final.ckpt";
  save_checkpoint(final_path.string(), trainer.net(), trainer.normalizer(),
                  trainer.progress());
  std::printf("saved %s\n", final_path.string().c_str());
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint_path, int episodes,
             std::uint64_t seed, const std::string& config_path,
             const std::string& out_dir) {
  const fs::path ckpt(checkpoint_path);
  if (!fs::exists(ckpt)) {
    std::fprintf(stderr, "checkpoint '%s' does not exist\n",
                 checkpoint_path.c_str());
    return kExitUsage;
  }
  std::string cfg_path = config_path;
  if (cfg_path.empty()) {
    const fs::path sibling = ckpt.parent_path() / "config.json";
    if (!fs::exists(sibling)) {
      std::fprintf(stderr,
                   "no --config given and '%s' not found next to the "
                   "checkpoint\n",
                   sibling.string().c_str());
      return kExitUsage;
    }
    cfg_path = sibling.string();
  }
  const FullConfig cfg = load_config_file(cfg_path);
  const CheckpointData data = load_checkpoint(checkpoint_path);
  if (data.shape.input_dim != LunaEnv::kObsDim ||
      data.shape.action_dim != kNumJoints) {
    std::fprintf(stderr, "checkpoint shape does not match the environment\n");
    return kExitUsage;
  }
  const ActorCritic net = data.build_net();
  const ObservationNormalizer norm = data.build_normalizer();

  EvalOptions opt;
  opt.episodes = episodes;
  opt.seed = seed;
  const EvalResult result = run_evaluation(cfg, net, norm, opt);
  const fs::path dir = out_dir.empty() ? ckpt.parent_path() : fs::path(out_dir);
  write_eval_outputs(result, dir);

  std::printf("episodes %zu\n", result.episodes.size());
  std::printf("pos_error  mean %.4f  median %.4f  p95 %.4f  (m)\n",
              result.pos_mean, result.pos_median, result.pos_p95);
  std::printf("rot_error  mean %.4f  median %.4f  p95 %.4f  (rad)\n",
              result.rot_mean, result.rot_median, result.rot_p95);
  std::printf("hard violations: %.2f%% of episodes\n",
              result.hard_violation_percent);
  std::printf("violation time %% per constraint:\n");
  for (std::size_t c = 0; c < result.constraint_names.size(); ++c)
    std::printf("  %-10s %8.4f\n", result.constraint_names[c].c_str(),
                result.violation_time_percent[c]);
  std::printf("wrote %s and %s\n", (dir / "eval_errors.csv").string().c_str(),
              (dir / "eval_summary.txt").string().c_str());
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed) {
  const GradCheckReport report = run_gradcheck(seed);
  for (std::size_t k = 0; k < report.cases.size(); ++k) {
    const GradCheckCase& c = report.cases[k];
    std::string shape = std::to_string(c.shape.input_dim);
    for (int h : c.shape.hidden) shape += "-" + std::to_string(h);
    shape += "-" + std::to_string(c.shape.action_dim);
    std::printf("case %2zu: shape %-12s worst %.3e\n", k, shape.c_str(), c.worst);
  }
  std::printf("gradcheck: worst %.3e  tolerance %.0e  %s\n", report.worst,
              report.tolerance, report.passed ? "PASS" : "FAIL");
  return report.passed ? kExitOk : kExitCheckFailed;
}

int cmd_tinycmdp(std::uint64_t seed, double gamma, int iterations,
                 const std::string& variant) {
  bool all_pass = true;
  auto run_variant = [&](bool cat_enabled) {
    TinyCmdpConfig tc;
    tc.gamma = gamma;
    tc.iterations = iterations;
    tc.seed = seed;
    tc.cat_enabled = cat_enabled;
    const TinyCmdpResult r = run_tinycmdp(tc);
    const double rel =
        std::abs(r.mean_value - r.oracle_value) / std::abs(r.oracle_value);
    const bool pass = cat_enabled
                          ? (r.stochastic_shortcut_rate < 0.01 && rel <= 0.10)
                          : (r.stochastic_shortcut_rate > 0.50 && rel <= 0.10);
    std::printf(
        "variant %-18s shortcut_rate %.4f  deterministic %.4f  value %.3f  "
        "oracle %.3f  iters %3d  %s\n",
        cat_enabled ? "terminations_on" : "terminations_off",
        r.stochastic_shortcut_rate, r.deterministic_shortcut_rate,
        r.mean_value, r.oracle_value, r.iterations_run,
        pass ? "PASS" : "FAIL");
    all_pass = all_pass && pass;
  };
  if (variant == "both" || variant == "on") run_variant(true);
  if (variant == "both" || variant == "off") run_variant(false);
  std::printf("tinycmdp: %s\n", all_pass ? "PASS" : "FAIL");
  return all_pass ? kExitOk : kExitCheckFailed;
}

int cmd_export(const std::string& run_dir, const std::string& format) {
  if (format != "csv") {
    std::fprintf(stderr, "unsupported export format '%s'\n", format.c_str());
    return kExitUsage;
  }
  export_run(run_dir);
  std::printf("wrote %s, %s and %s\n",
              (fs::path(run_dir) / "summary.txt").string().c_str(),
              (fs::path(run_dir) / "pos_error_hist.csv").string().c_str(),
              (fs::path(run_dir) / "rot_error_hist.csv").string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constraints-as-terminations locomanipulation trainer"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path, run_dir;
  std::string variant = "both", format = "csv";
  std::uint64_t seed = 0;
  int episodes = 128, iterations = 200;
  double gamma = 0.9;

  CLI::App* train = app.add_subcommand("train", "train a policy from a config");
  train->add_option("config", config_path, "JSON config file")->required();
  train->add_option("--out", out_dir, "override output.directory");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--episodes", episodes, "episode count")
      ->check(CLI::PositiveNumber);
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--config", config_path,
                   "config file (default: config.json next to the checkpoint)");
  eval->add_option("--out", out_dir, "output directory for eval files");

  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--seed", seed, "case-generation seed");

  CLI::App* tinycmdp = app.add_subcommand(
      "tinycmdp", "ring-MDP demonstration of the termination mechanism");
  tinycmdp->add_option("--seed", seed, "training seed");
  tinycmdp->add_option("--gamma", gamma, "discount factor")
      ->check(CLI::Range(0.0, 1.0));
  tinycmdp->add_option("--iterations", iterations, "iteration budget")
      ->check(CLI::PositiveNumber);
  tinycmdp->add_option("--variant", variant, "both | on | off")
      ->check(CLI::IsMember({"both", "on", "off"}));

  CLI::App* exp = app.add_subcommand("export", "summarize a run directory");
  exp->add_option("run_dir", run_dir, "directory holding eval_errors.csv")
      ->required();
  exp->add_option("--format", format, "output format (csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(config_path, out_dir);
    if (eval->parsed())
      return cmd_eval(checkpoint_path, episodes, seed,
                      eval->count("--config") ? config_path : "", out_dir);
    if (gradcheck->parsed()) return cmd_gradcheck(seed);
    if (tinycmdp->parsed())
      return cmd_tinycmdp(seed, gamma, iterations, variant);
    if (exp->parsed()) return cmd_export(run_dir, format);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
