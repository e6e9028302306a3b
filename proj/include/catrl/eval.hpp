#pragma once

// Deterministic policy evaluation: mean actions (no exploration noise), one
// freshly seeded environment per episode.  A hard constraint violation ends
// the episode and is recorded — evaluation never hides a failure behind a
// reset.  An episode's tracking errors are averaged over its last (up to) 50
// alive steps, i.e. the settled end of the approach.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "catrl/checkpoint.hpp"
#include "catrl/config.hpp"
#include "catrl/constraints.hpp"
#include "catrl/metrics.hpp"
#include "catrl/sim.hpp"

namespace catrl {

struct EvalOptions {
  int episodes = 128;
  std::uint64_t seed = 0;
  int tail_steps = 50;  // window for the per-episode error average
};

struct EvalEpisode {
  double pos_error = 0.0;  // m
  double rot_error = 0.0;  // rad
  bool hard_violation = false;
  int steps = 0;
};

struct EvalResult {
  std::vector<EvalEpisode> episodes;
  std::vector<std::string> constraint_names;
  std::vector<double> violation_time_percent;  // mean over episodes, per constraint

  double pos_mean = 0.0, pos_median = 0.0, pos_p95 = 0.0;
  double rot_mean = 0.0, rot_median = 0.0, rot_p95 = 0.0;
  double hard_violation_percent = 0.0;  // % of episodes
};

inline EvalResult run_evaluation(const FullConfig& cfg, const ActorCritic& net,
                                 const ObservationNormalizer& norm,
                                 const EvalOptions& opt) {
  ConstraintEngine engine = make_engine(cfg);
  EvalResult result;
  for (const auto& spec : engine.specs()) result.constraint_names.push_back(spec.name);

  Eigen::VectorXd value(1);
  std::vector<std::vector<ViolationVector>> episode_violations;
  for (int k = 0; k < opt.episodes; ++k) {
    LunaEnv env = make_env(cfg, derive_seed(opt.seed, k, kEvalSalt));
    Eigen::VectorXd obs = env.reset();

    EvalEpisode ep;
    std::vector<ViolationVector> viols;
    std::vector<double> pos_tail, rot_tail;
    while (true) {
      const Eigen::MatrixXd mean =
          net.forward(norm.normalize(obs).transpose(), value, nullptr);
      const EnvStep step = env.step(mean.row(0).transpose());
      ++ep.steps;
      pos_tail.push_back(step.errors.position);
      rot_tail.push_back(step.errors.rotation);
      const ViolationVector v = engine.violations_from_signals(step.constraint_signals);
      viols.push_back(v);
      const TerminationOutcome outcome = engine.evaluate(v);
      if (outcome.hard_triggered || step.fault) {
        ep.hard_violation = true;
        break;
      }
      if (step.truncated) break;
      obs = step.observation;
    }
    const auto tail = static_cast<std::ptrdiff_t>(
        std::min<std::size_t>(pos_tail.size(), static_cast<std::size_t>(opt.tail_steps)));
    ep.pos_error = mean_of(std::vector<double>(pos_tail.end() - tail, pos_tail.end()));
    ep.rot_error = mean_of(std::vector<double>(rot_tail.end() - tail, rot_tail.end()));
    episode_violations.push_back(std::move(viols));
    result.episodes.push_back(ep);
  }

  result.violation_time_percent = mean_violation_time_percent(episode_violations);
  std::vector<double> pos, rot;
  int hard = 0;
  for (const auto& ep : result.episodes) {
    pos.push_back(ep.pos_error);
    rot.push_back(ep.rot_error);
    if (ep.hard_violation) ++hard;
  }
  result.pos_mean = mean_of(pos);
  result.pos_median = median_of(pos);
  result.pos_p95 = percentile_of(pos, 95.0);
  result.rot_mean = mean_of(rot);
  result.rot_median = median_of(rot);
  result.rot_p95 = percentile_of(rot, 95.0);
  result.hard_violation_percent =
      100.0 * hard / static_cast<double>(std::max<std::size_t>(result.episodes.size(), 1));
  return result;
}

// eval_errors.csv (one row per episode) and eval_summary.txt into `dir`.
inline void write_eval_outputs(const EvalResult& r,
                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "eval_errors.csv", std::ios::trunc);
    if (!os)
      throw std::runtime_error("cannot open '" +
                               (dir / "eval_errors.csv").string() + "'");
    os << "episode,pos_error,rot_error,hard_violation,steps\n";
    for (std::size_t k = 0; k < r.episodes.size(); ++k) {
      const EvalEpisode& ep = r.episodes[k];
      os << k << ',' << format_metric(ep.pos_error) << ','
         << format_metric(ep.rot_error) << ',' << (ep.hard_violation ? 1 : 0)
         << ',' << ep.steps << '\n';
    }
  }
  {
    std::ofstream os(dir / "eval_summary.txt", std::ios::trunc);
    if (!os)
      throw std::runtime_error("cannot open '" +
                               (dir / "eval_summary.txt").string() + "'");
    os << "episodes: " << r.episodes.size() << "\n";
    os << "pos_error_mean: " << format_metric(r.pos_mean) << "\n";
    os << "pos_error_median: " << format_metric(r.pos_median) << "\n";
    os << "pos_error_p95: " << format_metric(r.pos_p95) << "\n";
    os << "rot_error_mean: " << format_metric(r.rot_mean) << "\n";
    os << "rot_error_median: " << format_metric(r.rot_median) << "\n";
    os << "rot_error_p95: " << format_metric(r.rot_p95) << "\n";
    os << "hard_violation_percent: " << format_metric(r.hard_violation_percent)
       << "\n";
    os << "violation_time_percent:\n";
    for (std::size_t c = 0; c < r.constraint_names.size(); ++c)
      os << "  " << r.constraint_names[c] << ": "
         << format_metric(r.violation_time_percent[c]) << "\n";
  }
}

}  // namespace catrl
