#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "catrl/constraints.hpp"
#include "catrl/env_types.hpp"
#include "catrl/mlp.hpp"
#include "catrl/policy.hpp"
#include "catrl/random.hpp"
#include "catrl/rollout.hpp"

using namespace catrl;

namespace {

// Brute-force oracle: expands the advantage as an explicit forward sum
//
//   A_t = sum_{k >= t} (gamma lambda)^{k-t} (prod_{j=t}^{k-1} acont_j) td_k
//
// instead of the backward recursion the implementation uses.
void gae_oracle(const RolloutBatch& b, double gamma, double lambda,
                Eigen::VectorXd& adv, Eigen::VectorXd& ret) {
  adv.resize(b.rows());
  ret.resize(b.rows());
  for (int e = 0; e < b.num_envs; ++e) {
    for (int t = 0; t < b.horizon; ++t) {
      double a = 0.0, scale = 1.0;
      for (int k = t; k < b.horizon; ++k) {
        const int i = b.row(e, k);
        const bool hard = b.hard_flags[i] != 0;
        const bool trunc = b.trunc_flags[i] != 0;
        double nv;
        if (hard)
          nv = 0.0;
        else if (trunc)
          nv = b.bootstrap_values[i];
        else if (k == b.horizon - 1)
          nv = b.final_bootstrap[e];
        else
          nv = b.values[i + 1];
        const double vcont = trunc ? 1.0 : 1.0 - b.deltas[i];
        const double td = b.rewards[i] + gamma * vcont * nv - b.values[i];
        a += scale * td;
        const double acont = (hard || trunc) ? 0.0 : 1.0 - b.deltas[i];
        scale *= gamma * lambda * acont;
      }
      adv[b.row(e, t)] = a;
      ret[b.row(e, t)] = a + b.values[b.row(e, t)];
    }
  }
}

RolloutBatch random_batch(RandomStream& rng, int envs, int horizon) {
  RolloutBatch b;
  b.allocate(envs, horizon, 1, 1, 1);
  for (int i = 0; i < b.rows(); ++i) {
    b.values[i] = rng.uniform(-2.0, 2.0);
    b.rewards[i] = rng.uniform(-1.0, 1.0);
    b.raw_rewards[i] = b.rewards[i];
    b.deltas[i] = rng.uniform01() < 0.4 ? 0.0 : rng.uniform(0.0, 1.0);
    b.hard_flags[i] = rng.uniform01() < 0.15 ? 1 : 0;
    b.trunc_flags[i] = rng.uniform01() < 0.15 ? 1 : 0;  // may overlap hard
    b.bootstrap_values[i] = rng.uniform(-2.0, 2.0);
  }
  for (int e = 0; e < envs; ++e) b.final_bootstrap[e] = rng.uniform(-2.0, 2.0);
  return b;
}

// Stub environment with scripted terminations; obs = [env id, step counter].
struct ScriptEnv {
  int id = 0;
  int hard_at = -1;      // step index that emits a positive hard signal
  int truncate_at = -1;  // episode_step that reports truncation
  int counter = 0;       // total steps ever taken (never resets)
  int episode = 0;

  int observation_dim() const { return 2; }
  int action_dim() const { return 1; }
  int episode_step() const { return episode; }

  Eigen::VectorXd reset() {
    episode = 0;
    return obs();
  }

  EnvStep step(const Eigen::VectorXd&) {
    ++counter;
    ++episode;
    EnvStep out;
    out.raw_reward = 1.0;
    out.constraint_signals = {counter == hard_at ? 1.0 : 0.0};
    out.truncated = truncate_at > 0 && episode >= truncate_at;
    out.observation = obs();
    return out;
  }

  Eigen::VectorXd obs() const {
    Eigen::VectorXd v(2);
    v << id, counter;
    return v;
  }
};

ConstraintEngine hard_engine() {
  ConstraintEngine engine;
  ConstraintSpec spec;
  spec.name = "trip";
  spec.kind = ConstraintKind::kHard;
  spec.p_min = spec.p_max = 1.0;
  engine.add(spec);
  return engine;
}

// critic reads sum(obs), actor outputs zero: hidden-free linear net with
// hand-set weights, so bootstrap values are exactly predictable
ActorCritic value_probe_net() {
  ActorCritic net(NetworkShape{2, {}, 1}, 0);
  net.params().setZero();
  net.block("critic.W0").setOnes();
  return net;
}

}  // namespace

TEST_CASE("gae matches the brute-force expansion on random batches",
          "[rollout]") {
  RandomStream rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int envs = 1 + static_cast<int>(rng.uniform_index(3));
    const int horizon = 1 + static_cast<int>(rng.uniform_index(8));
    RolloutBatch b = random_batch(rng, envs, horizon);
    const double gamma = rng.uniform(0.0, 1.0);
    const double lambda = rng.uniform(0.0, 1.0);
    Eigen::VectorXd adv, ret;
    gae_oracle(b, gamma, lambda, adv, ret);
    compute_gae(b, gamma, lambda);
    for (int i = 0; i < b.rows(); ++i) {
      CHECK(b.advantages[i] == Catch::Approx(adv[i]).margin(1e-10));
      CHECK(b.returns[i] == Catch::Approx(ret[i]).margin(1e-10));
    }
  }
}

TEST_CASE("delta of one collapses the advantage to a one-step error",
          "[rollout]") {
  RandomStream rng(5);
  RolloutBatch b = random_batch(rng, 2, 6);
  std::fill(b.hard_flags.begin(), b.hard_flags.end(), 0);
  std::fill(b.trunc_flags.begin(), b.trunc_flags.end(), 0);
  b.deltas.setOnes();
  compute_gae(b, 0.97, 0.9);
  for (int i = 0; i < b.rows(); ++i)
    CHECK(b.advantages[i] == Catch::Approx(b.rewards[i] - b.values[i]).margin(1e-12));
}

TEST_CASE("delta zero with lambda one telescopes to the discounted return",
          "[rollout]") {
  RandomStream rng(6);
  const double gamma = 0.9;
  RolloutBatch b = random_batch(rng, 1, 5);
  std::fill(b.hard_flags.begin(), b.hard_flags.end(), 0);
  std::fill(b.trunc_flags.begin(), b.trunc_flags.end(), 0);
  b.deltas.setZero();
  compute_gae(b, gamma, 1.0);
  for (int t = 0; t < b.horizon; ++t) {
    double expected = -b.values[t];
    double g = 1.0;
    for (int k = t; k < b.horizon; ++k) {
      expected += g * b.rewards[k];
      g *= gamma;
    }
    expected += g * b.final_bootstrap[0];
    CHECK(b.advantages[t] == Catch::Approx(expected).margin(1e-10));
  }
}

TEST_CASE("credit never crosses an episode end", "[rollout]") {
  RandomStream rng(7);
  RolloutBatch b = random_batch(rng, 1, 8);
  std::fill(b.hard_flags.begin(), b.hard_flags.end(), 0);
  std::fill(b.trunc_flags.begin(), b.trunc_flags.end(), 0);
  b.hard_flags[3] = 1;
  compute_gae(b, 0.95, 0.9);
  const Eigen::VectorXd before = b.advantages;

  // anything after the boundary is irrelevant to steps at or before it
  for (int i = 4; i < b.rows(); ++i) {
    b.rewards[i] += 10.0;
    b.values[i] -= 3.0;
  }
  b.final_bootstrap[0] = 99.0;
  compute_gae(b, 0.95, 0.9);
  for (int t = 0; t <= 3; ++t)
    CHECK(b.advantages[t] == Catch::Approx(before[t]).margin(1e-12));
}

TEST_CASE("hard end wins over truncation on the same row", "[rollout]") {
  RolloutBatch b;
  b.allocate(1, 1, 1, 1, 1);
  b.values[0] = 0.3;
  b.rewards[0] = 1.0;
  b.deltas[0] = 0.5;
  b.hard_flags[0] = 1;
  b.trunc_flags[0] = 1;
  b.bootstrap_values[0] = 7.0;  // must be ignored: hard means no bootstrap
  b.final_bootstrap[0] = 5.0;
  compute_gae(b, 0.9, 0.95);
  CHECK(b.advantages[0] == Catch::Approx(1.0 - 0.3));
}

TEST_CASE("advantage normalization standardizes the whole batch", "[rollout]") {
  RandomStream rng(8);
  Eigen::VectorXd adv(1000);
  for (int i = 0; i < adv.size(); ++i) adv[i] = rng.uniform(-3.0, 7.0);
  normalize_advantages(adv);
  CHECK(adv.mean() == Catch::Approx(0.0).margin(1e-12));
  CHECK(std::sqrt(adv.squaredNorm() / adv.size()) == Catch::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("collector keeps observations across calls and resets on ends",
          "[rollout]") {
  std::vector<ScriptEnv> envs(2);
  envs[0].id = 0;
  envs[1].id = 1;
  envs[1].hard_at = 3;  // env 1 trips a hard constraint on its third step
  RolloutCollector<ScriptEnv> collector(std::move(envs), 99);
  ActorCritic net = value_probe_net();
  ObservationNormalizer norm(2, false);
  ConstraintEngine engine = hard_engine();

  RolloutBatch first = collector.collect(net, norm, engine, 4);
  // env 0 never ends: rows carry counter 0,1,2,3
  for (int t = 0; t < 4; ++t) {
    CHECK(first.observations(first.row(0, t), 1) == t);
    CHECK(first.hard_flags[first.row(0, t)] == 0);
  }
  // env 1 ends at its step 3 (counter hits hard_at) and resets; the counter
  // keeps running, proving the post-reset observation was carried forward
  CHECK(first.hard_flags[first.row(1, 2)] == 1);
  CHECK(first.deltas[first.row(1, 2)] == Catch::Approx(1.0));
  CHECK(first.rewards[first.row(1, 2)] == Catch::Approx(0.0).margin(1e-12));
  CHECK(first.raw_rewards[first.row(1, 2)] == Catch::Approx(1.0));

  RolloutBatch second = collector.collect(net, norm, engine, 2);
  // continuation, not a restart: env 0's counter picks up at 4
  CHECK(second.observations(second.row(0, 0), 1) == 4);
  CHECK(second.observations(second.row(1, 0), 1) == 4);
}

TEST_CASE("truncation stores the pre-reset bootstrap value", "[rollout]") {
  std::vector<ScriptEnv> envs(1);
  envs[0].truncate_at = 3;
  RolloutCollector<ScriptEnv> collector(std::move(envs), 7);
  ActorCritic net = value_probe_net();  // V = id + counter
  ObservationNormalizer norm(2, false);
  ConstraintEngine engine = hard_engine();

  RolloutBatch b = collector.collect(net, norm, engine, 4);
  CHECK(b.trunc_flags[2] == 1);
  CHECK(b.hard_flags[2] == 0);
  // pre-reset observation was [0, 3] -> V = 3; the stored row obs is [0, 2]
  CHECK(b.bootstrap_values[2] == Catch::Approx(3.0));
  CHECK(b.observations(2, 1) == 2);
  // final bootstrap reads the carried observation [0, 4]
  CHECK(b.final_bootstrap[0] == Catch::Approx(4.0));
}

TEST_CASE("each env's rows are independent of how many envs run alongside",
          "[rollout]") {
  auto run = [](int env_count) {
    std::vector<ScriptEnv> envs(env_count);
    for (int e = 0; e < env_count; ++e) envs[e].id = e;
    RolloutCollector<ScriptEnv> collector(std::move(envs), 1234);
    ActorCritic net(NetworkShape{2, {8}, 1}, 77);
    ObservationNormalizer norm(2, false);
    ConstraintEngine engine = hard_engine();
    return collector.collect(net, norm, engine, 5);
  };
  const RolloutBatch two = run(2);
  const RolloutBatch four = run(4);
  for (int e = 0; e < 2; ++e)
    for (int t = 0; t < 5; ++t) {
      const int i2 = two.row(e, t), i4 = four.row(e, t);
      CHECK(two.actions(i2, 0) == four.actions(i4, 0));
      CHECK(two.log_probs[i2] == four.log_probs[i4]);
      CHECK(two.rewards[i2] == four.rewards[i4]);
    }
}

TEST_CASE("collector aggregates violation and delta statistics", "[rollout]") {
  std::vector<ScriptEnv> envs(1);
  envs[0].hard_at = 2;
  RolloutCollector<ScriptEnv> collector(std::move(envs), 3);
  ActorCritic net = value_probe_net();
  ObservationNormalizer norm(2, false);
  ConstraintEngine engine = hard_engine();

  RolloutStats stats;
  RolloutBatch b = collector.collect(net, norm, engine, 4, &stats);
  CHECK(stats.violation_percent.size() == 1);
  CHECK(stats.violation_percent[0] == Catch::Approx(25.0));  // 1 of 4 steps
  CHECK(stats.hard_terminations == 1);
  CHECK(stats.mean_raw_reward == Catch::Approx(1.0));
  CHECK(stats.mean_delta == Catch::Approx(0.25));
  CHECK(b.violations(1, 0) == Catch::Approx(1.0));
}
