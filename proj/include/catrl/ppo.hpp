#pragma once

// Clipped-surrogate policy optimization on top of the rollout batch, with
// analytic gradients through the shared loss.  One iteration is:
//
//   collect -> GAE -> whole-batch advantage standardization ->
//   epochs x minibatches of (loss, gradients, clip, Adam) ->
//   log-std clamp
//
// The loss for a minibatch of M samples is
//
//   L = -mean(min(rho A, clip(rho, 1 +- eps) A))
//       + value_coef * mean((V - R)^2)
//       - entropy_coef * H
//
// with rho = exp(logp_new - logp_old) and H the (state-independent) policy
// entropy.  Gradients are closed-form: the surrogate passes
// -A rho [surr1 <= surr2] / M into each sample's log-prob, which in turn
// contributes (a - mu) / sigma^2 to the mean head and z^2 - 1 to log-std.
//
// A non-finite loss or gradient anywhere in an update aborts the whole
// iteration and rolls the parameters and optimizer moments back to their
// pre-update snapshot, so one bad batch cannot poison the run.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "catrl/adam.hpp"
#include "catrl/constraints.hpp"
#include "catrl/env_types.hpp"
#include "catrl/mlp.hpp"
#include "catrl/policy.hpp"
#include "catrl/random.hpp"
#include "catrl/rollout.hpp"

namespace catrl {

// Seed-stream salts so every consumer of the master seed draws from its own
// independent stream (env internals, action noise, minibatch shuffling, ...).
inline constexpr std::uint64_t kNetInitSalt = 1;
inline constexpr std::uint64_t kActionSalt = 2;
inline constexpr std::uint64_t kEnvSalt = 3;
inline constexpr std::uint64_t kShuffleSalt = 4;
inline constexpr std::uint64_t kEvalSalt = 5;

struct TrainingConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  int epochs = 5;
  int minibatches = 4;
  double learning_rate = 3e-4;
  bool linear_lr_decay = true;   // lr_i = lr0 * (1 - i / iterations)
  double entropy_coef = 0.005;
  double value_coef = 0.5;
  double max_grad_norm = 1.0;    // <= 0 disables clipping
  int horizon = 64;
  int num_envs = 256;
  int iterations = 2000;
  std::uint64_t seed = 0;
  bool normalize_observations = true;
  AdamConfig adam;

  void validate() const {
    if (gamma < 0.0 || gamma > 1.0)
      throw std::invalid_argument("config: gamma outside [0, 1]");
    if (gae_lambda < 0.0 || gae_lambda > 1.0)
      throw std::invalid_argument("config: gae_lambda outside [0, 1]");
    if (clip_epsilon <= 0.0)
      throw std::invalid_argument("config: clip_epsilon must be positive");
    if (epochs < 1 || minibatches < 1)
      throw std::invalid_argument("config: epochs/minibatches must be >= 1");
    if (learning_rate <= 0.0)
      throw std::invalid_argument("config: learning_rate must be positive");
    if (horizon < 1 || num_envs < 1 || iterations < 1)
      throw std::invalid_argument("config: horizon/num_envs/iterations must be >= 1");
    if (static_cast<long long>(num_envs) * horizon < minibatches)
      throw std::invalid_argument("config: more minibatches than samples");
    if (entropy_coef < 0.0 || value_coef < 0.0)
      throw std::invalid_argument("config: negative loss coefficient");
  }
};

struct PPOLossParts {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;        // unscaled MSE
  double entropy = 0.0;      // H itself, not the bonus
  double clip_fraction = 0.0;
  double approx_kl = 0.0;    // mean(logp_old - logp_new)
};

// Loss and accumulated parameter gradients for one minibatch.  Observations
// arrive already normalized; the caller zeroes the gradient buffer first.
// With a huge clip_epsilon the min/clip never saturates and the loss is
// smooth in every parameter — that is what the finite-difference checker runs.
inline PPOLossParts ppo_loss_and_grad(
    ActorCritic& net, const Eigen::Ref<const Eigen::MatrixXd>& obs,
    const Eigen::Ref<const Eigen::MatrixXd>& actions,
    const Eigen::Ref<const Eigen::VectorXd>& old_log_probs,
    const Eigen::Ref<const Eigen::VectorXd>& advantages,
    const Eigen::Ref<const Eigen::VectorXd>& returns, double clip_epsilon,
    double value_coef, double entropy_coef) {
  const Eigen::Index m = obs.rows();
  const Eigen::Index a_dim = actions.cols();
  if (actions.rows() != m || old_log_probs.size() != m ||
      advantages.size() != m || returns.size() != m)
    throw std::invalid_argument("ppo_loss_and_grad: batch size mismatch");

  ForwardCache cache;
  Eigen::VectorXd values(m);
  const Eigen::MatrixXd means = net.forward(obs, values, &cache);
  const Eigen::VectorXd log_std = net.log_std();
  const Eigen::VectorXd new_lp = gaussian_log_prob_batch(means, log_std, actions);

  const Eigen::ArrayXd ratio = (new_lp - old_log_probs).array().exp();
  const Eigen::ArrayXd surr1 = ratio * advantages.array();
  const Eigen::ArrayXd surr2 =
      ratio.min(1.0 + clip_epsilon).max(1.0 - clip_epsilon) * advantages.array();

  PPOLossParts parts;
  parts.policy = -surr1.min(surr2).mean();
  parts.value = (values - returns).array().square().mean();
  parts.entropy = gaussian_entropy(log_std);
  parts.clip_fraction =
      ((ratio < 1.0 - clip_epsilon) || (ratio > 1.0 + clip_epsilon))
          .cast<double>()
          .mean();
  parts.approx_kl = (old_log_probs - new_lp).mean();
  parts.total = parts.policy + value_coef * parts.value - entropy_coef * parts.entropy;

  // d L / d logp_s: active only where the unclipped branch is the minimum
  const Eigen::ArrayXd mask = (surr1 <= surr2).cast<double>();
  const Eigen::ArrayXd d_lp =
      -advantages.array() * ratio * mask / static_cast<double>(m);

  Eigen::MatrixXd d_mean(m, a_dim);
  Eigen::VectorXd d_log_std = Eigen::VectorXd::Constant(a_dim, -entropy_coef);
  for (Eigen::Index j = 0; j < a_dim; ++j) {
    const double inv_var = std::exp(-2.0 * log_std[j]);
    const Eigen::ArrayXd diff = actions.col(j).array() - means.col(j).array();
    d_mean.col(j) = (d_lp * diff * inv_var).matrix();
    // z^2 - 1 per sample, weighted by the sample's log-prob gradient
    d_log_std[j] += (d_lp * (diff.square() * inv_var - 1.0)).sum();
  }
  const Eigen::VectorXd d_value =
      value_coef * 2.0 / static_cast<double>(m) * (values - returns);

  net.backward(cache, d_mean, d_value, d_log_std);
  return parts;
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;  // mean pre-clip norm
  double learning_rate = 0.0;
  bool aborted = false;    // rolled back after a non-finite loss/gradient
};

// Runs the epoch/minibatch schedule over one collected batch.  GAE targets
// and the advantage standardization are computed here, once, over the whole
// batch; `iteration` (0-based) drives the linear learning-rate decay.
inline UpdateStats ppo_update(ActorCritic& net, RolloutBatch& batch,
                              const ObservationNormalizer& norm,
                              const TrainingConfig& cfg, int iteration,
                              RandomStream& shuffle_rng) {
  compute_gae(batch, cfg.gamma, cfg.gae_lambda);
  normalize_advantages(batch.advantages);

  const int n = batch.rows();
  const Eigen::MatrixXd obs_norm = norm.normalize_batch(batch.observations);

  UpdateStats stats;
  stats.learning_rate =
      cfg.linear_lr_decay
          ? cfg.learning_rate *
                (1.0 - static_cast<double>(iteration) / cfg.iterations)
          : cfg.learning_rate;

  // snapshot for rollback on numeric failure
  const Eigen::VectorXd params0 = net.params();
  const Eigen::VectorXd m0 = net.adam_m();
  const Eigen::VectorXd v0 = net.adam_v();
  const std::int64_t step0 = net.adam_step();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const int obs_dim = static_cast<int>(batch.observations.cols());
  const int act_dim = static_cast<int>(batch.actions.cols());

  int passes = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int k = n - 1; k > 0; --k)
      std::swap(order[k], order[shuffle_rng.uniform_index(k + 1)]);
    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      const int begin = static_cast<int>(static_cast<std::int64_t>(mb) * n /
                                         cfg.minibatches);
      const int end = static_cast<int>(static_cast<std::int64_t>(mb + 1) * n /
                                       cfg.minibatches);
      const int m = end - begin;
      Eigen::MatrixXd mb_obs(m, obs_dim), mb_act(m, act_dim);
      Eigen::VectorXd mb_lp(m), mb_adv(m), mb_ret(m);
      for (int r = 0; r < m; ++r) {
        const int i = order[begin + r];
        mb_obs.row(r) = obs_norm.row(i);
        mb_act.row(r) = batch.actions.row(i);
        mb_lp[r] = batch.log_probs[i];
        mb_adv[r] = batch.advantages[i];
        mb_ret[r] = batch.returns[i];
      }

      net.zero_grads();
      const PPOLossParts parts =
          ppo_loss_and_grad(net, mb_obs, mb_act, mb_lp, mb_adv, mb_ret,
                            cfg.clip_epsilon, cfg.value_coef, cfg.entropy_coef);
      if (!std::isfinite(parts.total) || !net.grads().allFinite()) {
        net.params() = params0;
        net.adam_m() = m0;
        net.adam_v() = v0;
        net.adam_step() = step0;
        net.zero_grads();
        stats.aborted = true;
        return stats;
      }

      stats.grad_norm += clip_grad_norm(net.grads(), cfg.max_grad_norm);
      adam_step(net, stats.learning_rate, cfg.adam);
      net.clamp_log_std(kLogStdMin, kLogStdMax);

      stats.policy_loss += parts.policy;
      stats.value_loss += parts.value;
      stats.entropy += parts.entropy;
      stats.clip_fraction += parts.clip_fraction;
      stats.approx_kl += parts.approx_kl;
      ++passes;
    }
  }
  stats.policy_loss /= passes;
  stats.value_loss /= passes;
  stats.entropy /= passes;
  stats.clip_fraction /= passes;
  stats.approx_kl /= passes;
  stats.grad_norm /= passes;
  return stats;
}

// Everything the per-iteration callback might want to log.
struct IterationLog {
  int iteration = 0;      // 0-based
  double progress = 0.0;  // iteration / iterations, used for this curriculum step
  RolloutStats rollout;
  UpdateStats update;
  std::vector<double> probabilities;  // per constraint, at this progress
  std::vector<double> cmax;           // per constraint, as used this iteration
};

// Owns the training loop: curriculum progress, rollout collection, the cmax
// moving average, the policy update and (last) the observation-normalizer
// refresh, so updates within an iteration always see frozen statistics.
template <class Env>
  requires EnvLike<Env>
class Trainer {
 public:
  using Callback = std::function<void(const IterationLog&)>;

  Trainer(ActorCritic net, RolloutCollector<Env> collector,
          ConstraintEngine engine, ObservationNormalizer norm,
          TrainingConfig cfg)
      : net_(std::move(net)),
        collector_(std::move(collector)),
        engine_(std::move(engine)),
        norm_(std::move(norm)),
        cfg_(cfg),
        shuffle_rng_(derive_seed(cfg.seed, 0, kShuffleSalt)) {
    cfg_.validate();
  }

  ActorCritic& net() { return net_; }
  const ActorCritic& net() const { return net_; }
  ObservationNormalizer& normalizer() { return norm_; }
  const ObservationNormalizer& normalizer() const { return norm_; }
  ConstraintEngine& engine() { return engine_; }
  const ConstraintEngine& engine() const { return engine_; }
  const TrainingConfig& config() const { return cfg_; }
  int completed_iterations() const { return completed_; }
  double progress() const {
    return static_cast<double>(completed_) / cfg_.iterations;
  }
  void set_completed_iterations(int n) { completed_ = n; }

  bool done() const { return completed_ >= cfg_.iterations; }

  // One full iteration; returns the log entry for it.
  IterationLog iterate() {
    if (done()) throw std::logic_error("trainer: already finished");
    IterationLog log;
    log.iteration = completed_;
    log.progress = progress();
    engine_.set_progress(log.progress);

    RolloutBatch batch = collector_.collect(net_, norm_, engine_, cfg_.horizon,
                                            &log.rollout);
    log.probabilities = engine_.probabilities();
    log.cmax.resize(engine_.size());
    for (std::size_t c = 0; c < engine_.size(); ++c)
      log.cmax[c] = engine_.states()[c].cmax;
    for (std::size_t c = 0; c < engine_.size(); ++c)
      engine_.update_cmax(
          c, std::span<const double>(batch.violations.col(c).data(),
                                     static_cast<std::size_t>(batch.rows())));

    log.update = ppo_update(net_, batch, norm_, cfg_, completed_, shuffle_rng_);
    norm_.update(batch.observations);
    ++completed_;
    return log;
  }

  void run(const Callback& cb = nullptr) {
    while (!done()) {
      IterationLog log = iterate();
      if (cb) cb(log);
    }
  }

 private:
  ActorCritic net_;
  RolloutCollector<Env> collector_;
  ConstraintEngine engine_;
  ObservationNormalizer norm_;
  TrainingConfig cfg_;
  RandomStream shuffle_rng_;
  int completed_ = 0;
};

}  // namespace catrl
