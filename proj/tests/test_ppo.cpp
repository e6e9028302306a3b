#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <Eigen/Core>

#include "catrl/mlp.hpp"
#include "catrl/policy.hpp"
#include "catrl/ppo.hpp"
#include "catrl/random.hpp"
#include "catrl/rollout.hpp"

using namespace catrl;

namespace {

struct LossFixture {
  ActorCritic net{NetworkShape{3, {8}, 2}, 11};
  Eigen::MatrixXd obs, actions;
  Eigen::VectorXd advantages, returns;

  LossFixture(int m = 16) {
    RandomStream rng(4);
    obs.resize(m, 3);
    actions.resize(m, 2);
    advantages.resize(m);
    returns.resize(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < 3; ++j) obs(i, j) = rng.gaussian();
      for (int j = 0; j < 2; ++j) actions(i, j) = rng.gaussian();
      advantages[i] = rng.gaussian();
      returns[i] = rng.gaussian();
    }
  }

  // log-probs of the stored actions under the net's current policy
  Eigen::VectorXd current_log_probs() {
    Eigen::VectorXd values;
    const Eigen::MatrixXd mean = net.forward(obs, values);
    return gaussian_log_prob_batch(mean, net.log_std(), actions);
  }
};

}  // namespace

TEST_CASE("ratio one reduces the policy loss to minus the mean advantage",
          "[ppo]") {
  LossFixture f;
  const Eigen::VectorXd old_lp = f.current_log_probs();
  f.net.zero_grads();
  const PPOLossParts parts = ppo_loss_and_grad(
      f.net, f.obs, f.actions, old_lp, f.advantages, f.returns, 0.2, 0.5, 0.0);
  CHECK(parts.policy == Catch::Approx(-f.advantages.mean()).margin(1e-12));
  CHECK(parts.approx_kl == Catch::Approx(0.0).margin(1e-12));
  CHECK(parts.clip_fraction == 0.0);
}

TEST_CASE("value loss is the mean squared error against returns", "[ppo]") {
  LossFixture f;
  const Eigen::VectorXd old_lp = f.current_log_probs();
  Eigen::VectorXd values;
  f.net.forward(f.obs, values);
  const double mse = (values - f.returns).squaredNorm() / f.obs.rows();
  f.net.zero_grads();
  const PPOLossParts parts = ppo_loss_and_grad(
      f.net, f.obs, f.actions, old_lp, f.advantages, f.returns, 0.2, 0.5, 0.0);
  CHECK(parts.value == Catch::Approx(mse).margin(1e-12));
  const double h = gaussian_entropy(f.net.log_std());
  CHECK(parts.entropy == Catch::Approx(h).margin(1e-12));
  CHECK(parts.total ==
        Catch::Approx(parts.policy + 0.5 * parts.value).margin(1e-12));
}

TEST_CASE("zero advantages leave only entropy pressure on the actor", "[ppo]") {
  LossFixture f;
  const Eigen::VectorXd old_lp = f.current_log_probs();
  f.advantages.setZero();
  f.net.zero_grads();
  ppo_loss_and_grad(f.net, f.obs, f.actions, old_lp, f.advantages, f.returns,
                    0.2, 0.5, 0.01);
  // actor weights receive no gradient; log_std receives -entropy_coef per dim
  CHECK(f.net.grad_block("actor.W0").cwiseAbs().maxCoeff() == 0.0);
  CHECK(f.net.grad_block("actor.W1").cwiseAbs().maxCoeff() == 0.0);
  CHECK(f.net.grad_block("actor.b1").cwiseAbs().maxCoeff() == 0.0);
  for (int j = 0; j < 2; ++j)
    CHECK(f.net.grad_block("log_std")(j, 0) ==
          Catch::Approx(-0.01).margin(1e-15));
  // the critic still learns
  CHECK(f.net.grad_block("critic.W0").cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("clipping freezes samples whose ratio left the trust region",
          "[ppo]") {
  LossFixture f;
  // pretend the behavior policy disagreed wildly: large positive advantage
  // with an old log-prob far below the current one drives the ratio high
  Eigen::VectorXd old_lp = f.current_log_probs();
  f.advantages.setOnes();
  old_lp.array() -= 2.0;  // ratio = e^2 for every sample, far past 1 + eps
  f.net.zero_grads();
  const PPOLossParts parts = ppo_loss_and_grad(
      f.net, f.obs, f.actions, old_lp, f.advantages, f.returns, 0.2, 0.0, 0.0);
  CHECK(parts.clip_fraction == 1.0);
  // clipped branch is constant in the parameters: actor gradient vanishes
  CHECK(f.net.grad_block("actor.W1").cwiseAbs().maxCoeff() == 0.0);
  CHECK(parts.policy == Catch::Approx(-(1.0 + 0.2)).margin(1e-12));
}

TEST_CASE("update with several transitions moves log-probs with advantages",
          "[ppo]") {
  RandomStream rng(9);
  ActorCritic net(NetworkShape{2, {8}, 1}, 5);
  const int n = 32;
  RolloutBatch b;
  b.allocate(1, n, 2, 1, 1);
  for (int i = 0; i < n; ++i) {
    b.observations(i, 0) = rng.gaussian();
    b.observations(i, 1) = rng.gaussian();
    b.actions(i, 0) = rng.gaussian();
    b.rewards[i] = b.actions(i, 0) > 0 ? 1.0 : -1.0;  // reward positive actions
    b.raw_rewards[i] = b.rewards[i];
    b.deltas[i] = 1.0;  // one-step advantages: A = r - V
    b.bootstrap_values[i] = 0.0;
  }
  b.final_bootstrap[0] = 0.0;
  Eigen::VectorXd values;
  const Eigen::MatrixXd mean = net.forward(b.observations, values);
  const Eigen::VectorXd lp_before =
      gaussian_log_prob_batch(mean, net.log_std(), b.actions);
  b.log_probs = lp_before;
  b.values = values;

  TrainingConfig cfg;
  cfg.num_envs = 1;
  cfg.horizon = n;
  cfg.epochs = 4;
  cfg.minibatches = 2;
  cfg.iterations = 100;
  cfg.learning_rate = 5e-3;
  cfg.entropy_coef = 0.0;
  ObservationNormalizer norm(2, false);
  RandomStream shuffle(1);
  const UpdateStats stats = ppo_update(net, b, norm, cfg, 0, shuffle);
  REQUIRE_FALSE(stats.aborted);

  const Eigen::MatrixXd mean_after = net.forward(b.observations, values);
  const Eigen::VectorXd lp_after =
      gaussian_log_prob_batch(mean_after, net.log_std(), b.actions);
  double corr = 0.0;
  for (int i = 0; i < n; ++i)
    corr += (lp_after[i] - lp_before[i]) * (b.rewards[i] > 0 ? 1.0 : -1.0);
  CHECK(corr > 0.0);  // rewarded actions gained probability mass on average
}

TEST_CASE("learning rate zero leaves every parameter untouched", "[ppo]") {
  RandomStream rng(2);
  ActorCritic net(NetworkShape{3, {8}, 2}, 7);
  const Eigen::VectorXd before = net.params();
  RolloutBatch b;
  b.allocate(2, 4, 3, 2, 1);
  for (int i = 0; i < b.rows(); ++i) {
    for (int j = 0; j < 3; ++j) b.observations(i, j) = rng.gaussian();
    for (int j = 0; j < 2; ++j) b.actions(i, j) = rng.gaussian();
    b.log_probs[i] = rng.gaussian();
    b.values[i] = rng.gaussian();
    b.rewards[i] = rng.gaussian();
    b.deltas[i] = 0.2;
  }
  b.final_bootstrap.setZero();
  b.bootstrap_values.setZero();

  TrainingConfig cfg;
  cfg.num_envs = 2;
  cfg.horizon = 4;
  cfg.epochs = 3;
  cfg.minibatches = 2;
  cfg.learning_rate = 0.0;
  cfg.linear_lr_decay = false;
  ObservationNormalizer norm(3, false);
  RandomStream shuffle(1);
  const UpdateStats stats = ppo_update(net, b, norm, cfg, 0, shuffle);
  REQUIRE_FALSE(stats.aborted);
  CHECK((net.params() - before).cwiseAbs().maxCoeff() == 0.0);
  CHECK(stats.learning_rate == 0.0);
}

TEST_CASE("non-finite inputs roll the optimizer back to its snapshot",
          "[ppo]") {
  RandomStream rng(3);
  ActorCritic net(NetworkShape{3, {8}, 2}, 7);
  RolloutBatch b;
  b.allocate(1, 8, 3, 2, 1);
  for (int i = 0; i < b.rows(); ++i) {
    for (int j = 0; j < 3; ++j) b.observations(i, j) = rng.gaussian();
    for (int j = 0; j < 2; ++j) b.actions(i, j) = rng.gaussian();
    b.log_probs[i] = rng.gaussian();
    b.values[i] = rng.gaussian();
    b.rewards[i] = rng.gaussian();
  }
  b.rewards[3] = std::numeric_limits<double>::quiet_NaN();  // poison one return
  b.final_bootstrap.setZero();
  b.bootstrap_values.setZero();

  TrainingConfig cfg;
  cfg.num_envs = 1;
  cfg.horizon = 8;
  cfg.epochs = 2;
  cfg.minibatches = 2;
  cfg.learning_rate = 1e-3;
  ObservationNormalizer norm(3, false);
  RandomStream shuffle(1);

  const Eigen::VectorXd params_before = net.params();
  const Eigen::VectorXd m_before = net.adam_m();
  const std::int64_t step_before = net.adam_step();
  const UpdateStats stats = ppo_update(net, b, norm, cfg, 0, shuffle);
  CHECK(stats.aborted);
  CHECK((net.params() - params_before).cwiseAbs().maxCoeff() == 0.0);
  CHECK((net.adam_m() - m_before).cwiseAbs().maxCoeff() == 0.0);
  CHECK(net.adam_step() == step_before);
}

TEST_CASE("linear decay scales the learning rate by remaining progress",
          "[ppo]") {
  TrainingConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.iterations = 200;
  RandomStream rng(1);
  ActorCritic net(NetworkShape{2, {4}, 1}, 1);
  RolloutBatch b;
  b.allocate(1, 2, 2, 1, 1);
  b.observations.setRandom();
  b.actions.setRandom();
  Eigen::VectorXd values;
  const Eigen::MatrixXd mean = net.forward(b.observations, values);
  b.log_probs = gaussian_log_prob_batch(mean, net.log_std(), b.actions);
  b.values = values;
  b.rewards.setConstant(0.5);
  b.final_bootstrap.setZero();
  b.bootstrap_values.setZero();
  cfg.num_envs = 1;
  cfg.horizon = 2;
  cfg.epochs = 1;
  cfg.minibatches = 1;
  ObservationNormalizer norm(2, false);
  RandomStream shuffle(4);
  RolloutBatch copy = b;
  const UpdateStats at_half = ppo_update(net, copy, norm, cfg, 100, shuffle);
  CHECK(at_half.learning_rate == Catch::Approx(0.5e-3));
  copy = b;
  const UpdateStats at_start = ppo_update(net, copy, norm, cfg, 0, shuffle);
  CHECK(at_start.learning_rate == Catch::Approx(1e-3));
}

TEST_CASE("training config validation rejects bad settings", "[ppo]") {
  TrainingConfig cfg;
  cfg.validate();
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainingConfig{};
  cfg.minibatches = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainingConfig{};
  cfg.clip_epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainingConfig{};
  cfg.horizon = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainingConfig{};
  cfg.minibatches = 100;
  cfg.num_envs = 4;
  cfg.horizon = 8;  // 32 samples cannot fill 100 minibatches
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
