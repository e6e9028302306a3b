#pragma once

// Five-state ring MDP with a tempting shortcut, small enough for exact value
// iteration.  It exists to demonstrate the termination mechanism end to end:
//
//   * action <= 0 ("safe"):     reward +1, advance one state;
//   * action  > 0 ("shortcut"): reward +2, advance two states, and the single
//                               constraint signal reads 1.0 (limit 0).
//
// With the shortcut constraint registered as hard, taking it attenuates the
// reward, terminates the episode and resets — the learned policy should all
// but stop using it while the critic approaches the always-safe value
// 1 / (1 - gamma).  With the constraint neutered (soft, probability pinned to
// zero, so no attenuation and no termination), plain PPO should embrace the
// shortcut and approach 2 / (1 - gamma).

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "catrl/constraints.hpp"
#include "catrl/env_types.hpp"
#include "catrl/mlp.hpp"
#include "catrl/policy.hpp"
#include "catrl/ppo.hpp"
#include "catrl/random.hpp"
#include "catrl/rollout.hpp"

namespace catrl {

class ChainEnv {
 public:
  static constexpr int kNumStates = 5;
  static constexpr int kEpisodeLimit = 50;

  explicit ChainEnv(std::uint64_t seed) : rng_(seed) {}

  int observation_dim() const { return kNumStates; }
  int action_dim() const { return 1; }
  int episode_step() const { return steps_; }
  int state() const { return state_; }

  Eigen::VectorXd reset() {
    state_ = static_cast<int>(rng_.uniform_index(kNumStates));
    steps_ = 0;
    return one_hot(state_);
  }

  EnvStep step(const Eigen::VectorXd& action) {
    const bool shortcut = action[0] > 0.0;
    state_ = (state_ + (shortcut ? 2 : 1)) % kNumStates;
    ++steps_;
    EnvStep out;
    out.raw_reward = shortcut ? 2.0 : 1.0;
    out.rewards.total = out.raw_reward;
    out.constraint_signals = {shortcut ? 1.0 : 0.0};
    out.truncated = steps_ >= kEpisodeLimit;
    out.observation = one_hot(state_);
    return out;
  }

  static Eigen::VectorXd one_hot(int state) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(kNumStates);
    v[state] = 1.0;
    return v;
  }

 private:
  RandomStream rng_;
  int state_ = 0;
  int steps_ = 0;
};

// Exact value iteration on the ring; the fixed point is state-independent:
// 1 / (1 - gamma) when the shortcut is off limits, 2 / (1 - gamma) when not.
inline std::array<double, ChainEnv::kNumStates> chain_value_iteration(
    double gamma, bool allow_shortcut) {
  std::array<double, ChainEnv::kNumStates> v{};
  for (int sweep = 0; sweep < 100000; ++sweep) {
    std::array<double, ChainEnv::kNumStates> next{};
    double change = 0.0;
    for (int s = 0; s < ChainEnv::kNumStates; ++s) {
      double best = 1.0 + gamma * v[(s + 1) % ChainEnv::kNumStates];
      if (allow_shortcut)
        best = std::max(best, 2.0 + gamma * v[(s + 2) % ChainEnv::kNumStates]);
      next[s] = best;
      change = std::max(change, std::abs(next[s] - v[s]));
    }
    v = next;
    if (change < 1e-13) break;
  }
  return v;
}

struct TinyCmdpConfig {
  double gamma = 0.9;
  int iterations = 200;
  int num_envs = 64;
  int horizon = 32;
  double learning_rate = 3e-3;
  double entropy_coef = 0.001;
  std::uint64_t seed = 0;
  bool cat_enabled = true;
};

struct TinyCmdpResult {
  double stochastic_shortcut_rate = 0.0;     // sampled actions, fraction > 0
  double deterministic_shortcut_rate = 0.0;  // mean actions, fraction > 0
  double mean_value = 0.0;                   // critic over the 5 states
  double oracle_value = 0.0;                 // exact VI for the same variant
  int iterations_run = 0;
};

// Shortcut rates and mean critic value for the current policy.
inline TinyCmdpResult measure_chain_policy(const ActorCritic& net,
                                           double gamma, bool cat_enabled,
                                           std::uint64_t seed) {
  TinyCmdpResult r;
  const Eigen::VectorXd log_std = net.log_std();
  Eigen::VectorXd value(1);

  // stochastic rollout: fresh envs, policy noise on
  RandomStream rng(derive_seed(seed, 0, kEvalSalt));
  const int rollouts = 32, steps = 100;
  int shortcut_count = 0;
  for (int k = 0; k < rollouts; ++k) {
    ChainEnv env(derive_seed(seed, k + 1, kEvalSalt));
    Eigen::VectorXd obs = env.reset();
    for (int t = 0; t < steps; ++t) {
      const Eigen::MatrixXd mean =
          net.forward(obs.transpose(), value, nullptr);
      const ActionSample s =
          sample_action(mean.row(0).transpose(), log_std, rng);
      if (s.action[0] > 0.0) ++shortcut_count;
      EnvStep step = env.step(s.action);
      obs = step.truncated ? env.reset() : step.observation;
    }
  }
  r.stochastic_shortcut_rate =
      static_cast<double>(shortcut_count) / (rollouts * steps);

  // deterministic sweep: the mean action at each state decides the rate along
  // the trajectory the means themselves induce
  {
    ChainEnv env(derive_seed(seed, 0, kEvalSalt + 1));
    Eigen::VectorXd obs = env.reset();
    int det_shortcuts = 0;
    for (int t = 0; t < steps; ++t) {
      const Eigen::MatrixXd mean = net.forward(obs.transpose(), value, nullptr);
      Eigen::VectorXd a = mean.row(0);
      if (a[0] > 0.0) ++det_shortcuts;
      EnvStep step = env.step(a);
      obs = step.truncated ? env.reset() : step.observation;
    }
    r.deterministic_shortcut_rate = static_cast<double>(det_shortcuts) / steps;
  }

  double v_sum = 0.0;
  for (int s = 0; s < ChainEnv::kNumStates; ++s) {
    net.forward(ChainEnv::one_hot(s).transpose(), value, nullptr);
    v_sum += value[0];
  }
  r.mean_value = v_sum / ChainEnv::kNumStates;

  const auto vi = chain_value_iteration(gamma, !cat_enabled);
  r.oracle_value = vi[0];
  return r;
}

// Trains one variant and reports the final measurement.  Training stops early
// once the policy and critic already tell the variant's story; otherwise it
// uses the full iteration budget.
inline TinyCmdpResult run_tinycmdp(const TinyCmdpConfig& tc) {
  TrainingConfig cfg;
  cfg.gamma = tc.gamma;
  cfg.learning_rate = tc.learning_rate;
  cfg.entropy_coef = tc.entropy_coef;
  cfg.horizon = tc.horizon;
  cfg.num_envs = tc.num_envs;
  cfg.iterations = tc.iterations;
  cfg.seed = tc.seed;
  cfg.normalize_observations = false;

  NetworkShape shape{ChainEnv::kNumStates, {32, 32}, 1};
  ActorCritic net(shape, derive_seed(tc.seed, 0, kNetInitSalt));

  std::vector<ChainEnv> envs;
  envs.reserve(tc.num_envs);
  for (int e = 0; e < tc.num_envs; ++e)
    envs.emplace_back(derive_seed(tc.seed, e, kEnvSalt));
  RolloutCollector<ChainEnv> collector(std::move(envs),
                                       derive_seed(tc.seed, 0, kActionSalt));

  ConstraintEngine engine;
  ConstraintSpec spec;
  spec.name = "shortcut";
  if (tc.cat_enabled) {
    spec.kind = ConstraintKind::kHard;
    spec.p_min = spec.p_max = 1.0;
  } else {
    // neutered variant: zero probability soft constraint — no attenuation,
    // no termination — so the learner sees plain unconstrained PPO
    spec.kind = ConstraintKind::kSoft;
    spec.p_min = spec.p_max = 0.0;
  }
  engine.add(spec);

  ObservationNormalizer norm(ChainEnv::kNumStates, false);
  Trainer<ChainEnv> trainer(std::move(net), std::move(collector),
                            std::move(engine), std::move(norm), cfg);

  auto settled = [&](const TinyCmdpResult& m) {
    const double rel =
        std::abs(m.mean_value - m.oracle_value) / std::abs(m.oracle_value);
    if (tc.cat_enabled)
      return m.deterministic_shortcut_rate == 0.0 &&
             m.stochastic_shortcut_rate < 0.005 && rel < 0.05;
    return m.stochastic_shortcut_rate > 0.55 && rel < 0.05;
  };

  TinyCmdpResult result;
  while (!trainer.done()) {
    trainer.iterate();
    const int done_now = trainer.completed_iterations();
    if (done_now % 10 == 0 || trainer.done()) {
      result = measure_chain_policy(trainer.net(), tc.gamma, tc.cat_enabled,
                                    tc.seed);
      result.iterations_run = done_now;
      if (done_now >= 40 && settled(result)) break;
    }
  }
  if (result.iterations_run == 0) {
    result = measure_chain_policy(trainer.net(), tc.gamma, tc.cat_enabled,
                                  tc.seed);
    result.iterations_run = trainer.completed_iterations();
  }
  return result;
}

}  // namespace catrl
