#pragma once

// On-policy rollout storage, the termination-weighted GAE recursion and a
// collector templated over the environment interface.
//
// Episode-end bookkeeping distinguishes three cases per transition:
//   * hard end   — a hard constraint fired (or the sim faulted): true
//                  terminal, the value bootstrap is zero;
//   * truncation — the episode hit its time limit: not a real terminal, so
//                  the pre-reset observation's value bootstraps fully;
//   * continuing — the bootstrap is the next step's value, attenuated by the
//                  continuation weight (1 - delta).
// The advantage recursion is cut (weight 0) whenever the episode ended for
// either reason and carries (1 - delta) otherwise, so a step that was *close*
// to terminating contributes proportionally less of its successors' credit.
// When both flags are set on one row the hard end wins.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "catrl/constraints.hpp"
#include "catrl/env_types.hpp"
#include "catrl/mlp.hpp"
#include "catrl/policy.hpp"
#include "catrl/random.hpp"

namespace catrl {

// Structure-of-arrays storage for one iteration's worth of transitions.
// Row layout groups each environment's trajectory contiguously:
// row(e, t) = e * horizon + t.  Observations are stored raw; normalization
// with the iteration's frozen statistics happens where they are consumed.
struct RolloutBatch {
  int num_envs = 0;
  int horizon = 0;

  Eigen::MatrixXd observations;  // N x obs_dim, raw
  Eigen::MatrixXd actions;       // N x action_dim
  Eigen::VectorXd log_probs;     // N, at collection time
  Eigen::VectorXd values;        // N, V(normalized obs) at collection time
  Eigen::VectorXd raw_rewards;   // N, environment reward
  Eigen::VectorXd rewards;       // N, attenuated (1 - delta) * raw
  Eigen::VectorXd deltas;        // N, termination probability
  Eigen::MatrixXd violations;    // N x num_constraints, non-negative
  std::vector<std::uint8_t> hard_flags;   // N, hard constraint or sim fault
  std::vector<std::uint8_t> trunc_flags;  // N, time-limit truncation
  Eigen::VectorXd bootstrap_values;  // N, V(pre-reset obs) on truncated rows
  Eigen::VectorXd final_bootstrap;   // num_envs, V(obs carried past the batch)

  Eigen::VectorXd advantages;  // N, filled by compute_gae
  Eigen::VectorXd returns;     // N, advantages + values

  int rows() const { return num_envs * horizon; }
  int row(int env, int t) const { return env * horizon + t; }

  void allocate(int envs, int horizon_steps, int obs_dim, int action_dim,
                int num_constraints) {
    num_envs = envs;
    horizon = horizon_steps;
    const int n = rows();
    observations.resize(n, obs_dim);
    actions.resize(n, action_dim);
    log_probs.resize(n);
    values.resize(n);
    raw_rewards.resize(n);
    rewards.resize(n);
    deltas.resize(n);
    violations.resize(n, num_constraints);
    hard_flags.assign(n, 0);
    trunc_flags.assign(n, 0);
    bootstrap_values = Eigen::VectorXd::Zero(n);
    final_bootstrap = Eigen::VectorXd::Zero(envs);
    advantages.resize(0);
    returns.resize(0);
  }
};

// Generalized advantage estimation with the continuation weight (1 - delta)
// standing in for the usual binary not-done.  Works backwards per env:
//
//   nv_t    = 0 on hard ends; the stored bootstrap on truncations; V_{t+1}
//             otherwise (the batch-final bootstrap at t = H-1)
//   td_t    = r_t + gamma * (trunc ? 1 : 1 - delta_t) * nv_t - V_t
//   A_t     = td_t + gamma * lambda * (ended ? 0 : 1 - delta_t) * A_{t+1}
//   R_t     = A_t + V_t
inline void compute_gae(RolloutBatch& b, double gamma, double lambda) {
  const int n = b.rows();
  if (static_cast<int>(b.hard_flags.size()) != n ||
      static_cast<int>(b.trunc_flags.size()) != n)
    throw std::invalid_argument("compute_gae: flag arrays mismatch the batch");
  b.advantages.resize(n);
  b.returns.resize(n);
  for (int e = 0; e < b.num_envs; ++e) {
    double a_next = 0.0;
    for (int t = b.horizon - 1; t >= 0; --t) {
      const int i = b.row(e, t);
      const bool hard = b.hard_flags[i] != 0;
      const bool trunc = b.trunc_flags[i] != 0;
      double next_value;
      if (hard)
        next_value = 0.0;
      else if (trunc)
        next_value = b.bootstrap_values[i];
      else if (t == b.horizon - 1)
        next_value = b.final_bootstrap[e];
      else
        next_value = b.values[i + 1];
      const double v_cont = trunc ? 1.0 : 1.0 - b.deltas[i];
      const double td = b.rewards[i] + gamma * v_cont * next_value - b.values[i];
      const double a_cont = (hard || trunc) ? 0.0 : 1.0 - b.deltas[i];
      a_next = td + gamma * lambda * a_cont * a_next;
      b.advantages[i] = a_next;
      b.returns[i] = a_next + b.values[i];
    }
  }
}

// In-place whole-batch standardization (population std, epsilon-guarded).
inline void normalize_advantages(Eigen::VectorXd& adv) {
  if (adv.size() == 0) return;
  adv.array() -= adv.mean();
  const double std_dev = std::sqrt(adv.squaredNorm() / adv.size());
  adv /= std_dev + 1e-8;
}

// Per-iteration aggregates for the metrics log.
struct RolloutStats {
  double mean_raw_reward = 0.0;
  double mean_task_reward = 0.0;
  double mean_power_reward = 0.0;
  double mean_pos_error = 0.0;
  double mean_rot_error = 0.0;
  double mean_delta = 0.0;
  std::vector<double> violation_percent;  // per constraint, % of steps > 0
  int hard_terminations = 0;
  int truncations = 0;
};

// Steps a fixed set of environments with the current policy.  Each env owns
// an action-noise stream derived from (seed, env index) and keeps its
// observation across collect() calls, so results do not depend on how many
// iterations ran before or on any interleaving with other envs.
template <class Env>
  requires EnvLike<Env>
class RolloutCollector {
 public:
  RolloutCollector(std::vector<Env> envs, std::uint64_t action_seed)
      : envs_(std::move(envs)) {
    if (envs_.empty())
      throw std::invalid_argument("collector: need at least one environment");
    action_rngs_.reserve(envs_.size());
    for (std::size_t e = 0; e < envs_.size(); ++e)
      action_rngs_.emplace_back(derive_seed(action_seed, e));
    obs_.reserve(envs_.size());
    for (auto& env : envs_) obs_.push_back(env.reset());
  }

  int num_envs() const { return static_cast<int>(envs_.size()); }
  Env& env(int e) { return envs_.at(e); }
  const Eigen::VectorXd& current_obs(int e) const { return obs_.at(e); }

  // One on-policy rollout of `horizon` steps per environment.  The engine is
  // read-only here: deltas across the whole batch use the same cmax and
  // curriculum state; the caller advances both between iterations.
  RolloutBatch collect(const ActorCritic& net, const ObservationNormalizer& norm,
                       const ConstraintEngine& engine, int horizon,
                       RolloutStats* stats = nullptr) {
    const int e_count = num_envs();
    const int obs_dim = envs_.front().observation_dim();
    const int act_dim = envs_.front().action_dim();
    const int n_constraints = static_cast<int>(engine.size());

    RolloutBatch batch;
    batch.allocate(e_count, horizon, obs_dim, act_dim, n_constraints);

    RolloutStats agg;
    agg.violation_percent.assign(n_constraints, 0.0);

    const Eigen::VectorXd log_std = net.log_std();
    Eigen::MatrixXd step_obs(e_count, obs_dim);
    Eigen::VectorXd step_values(e_count);
    std::vector<int> pending_rows;  // truncated rows awaiting a bootstrap

    for (int t = 0; t < horizon; ++t) {
      for (int e = 0; e < e_count; ++e) step_obs.row(e) = obs_[e];
      const Eigen::MatrixXd means =
          net.forward(norm.normalize_batch(step_obs), step_values, nullptr);

      pending_rows.clear();
      Eigen::MatrixXd pending_obs(e_count, obs_dim);
      for (int e = 0; e < e_count; ++e) {
        const int i = batch.row(e, t);
        const Eigen::VectorXd mean = means.row(e);
        const ActionSample sample = sample_action(mean, log_std, action_rngs_[e]);
        const EnvStep step = envs_[e].step(sample.action);

        const ViolationVector viol =
            engine.violations_from_signals(step.constraint_signals);
        const TerminationOutcome outcome = engine.evaluate(viol);
        const bool hard_end = outcome.hard_triggered || step.fault;

        batch.observations.row(i) = obs_[e];
        batch.actions.row(i) = sample.action;
        batch.log_probs[i] = sample.log_prob;
        batch.values[i] = step_values[e];
        batch.raw_rewards[i] = step.raw_reward;
        const auto [weighted, delta] = apply_termination(step.raw_reward, outcome);
        batch.rewards[i] = weighted;
        batch.deltas[i] = delta;
        for (int c = 0; c < n_constraints; ++c) {
          batch.violations(i, c) = viol[c];
          if (viol[c] > 0.0) agg.violation_percent[c] += 1.0;
        }
        batch.hard_flags[i] = hard_end ? 1 : 0;
        batch.trunc_flags[i] = step.truncated ? 1 : 0;

        agg.mean_raw_reward += step.raw_reward;
        agg.mean_task_reward += step.rewards.task;
        agg.mean_power_reward += step.rewards.power;
        agg.mean_pos_error += step.errors.position;
        agg.mean_rot_error += step.errors.rotation;
        agg.mean_delta += delta;
        if (hard_end) ++agg.hard_terminations;
        if (step.truncated) ++agg.truncations;

        if (step.truncated && !hard_end) {
          pending_obs.row(static_cast<int>(pending_rows.size())) = step.observation;
          pending_rows.push_back(i);
        }
        if (hard_end || step.truncated)
          obs_[e] = envs_[e].reset();
        else
          obs_[e] = step.observation;
      }

      if (!pending_rows.empty()) {
        const int m = static_cast<int>(pending_rows.size());
        Eigen::VectorXd boot_values(m);
        net.forward(norm.normalize_batch(pending_obs.topRows(m)), boot_values,
                    nullptr);
        for (int k = 0; k < m; ++k)
          batch.bootstrap_values[pending_rows[k]] = boot_values[k];
      }
    }

    // value of the observation each env carries into the next iteration;
    // unused by GAE for envs whose last row ended
    for (int e = 0; e < e_count; ++e) step_obs.row(e) = obs_[e];
    net.forward(norm.normalize_batch(step_obs), batch.final_bootstrap, nullptr);

    if (stats) {
      const double n = static_cast<double>(batch.rows());
      agg.mean_raw_reward /= n;
      agg.mean_task_reward /= n;
      agg.mean_power_reward /= n;
      agg.mean_pos_error /= n;
      agg.mean_rot_error /= n;
      agg.mean_delta /= n;
      for (auto& p : agg.violation_percent) p *= 100.0 / n;
      *stats = std::move(agg);
    }
    return batch;
  }

 private:
  std::vector<Env> envs_;
  std::vector<RandomStream> action_rngs_;
  std::vector<Eigen::VectorXd> obs_;
};

}  // namespace catrl
