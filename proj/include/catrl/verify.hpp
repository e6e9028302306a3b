#pragma once

// Finite-difference verification of the analytic gradients, run over the
// actual production loss (ppo_loss_and_grad).  The clip threshold is set so
// large that min/clip never switches branch, leaving the loss smooth in every
// parameter — central differences then measure the true derivative, while the
// code path stays byte-for-byte the one training uses.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "catrl/mlp.hpp"
#include "catrl/policy.hpp"
#include "catrl/ppo.hpp"
#include "catrl/random.hpp"

namespace catrl {

struct BlockGradError {
  std::string name;
  double error = 0.0;  // relative L2 over the block
};

// Per-block relative L2 distance between two gradient vectors:
//   |ga - gb| / max(|ga| + |gb|, 1e-12)
inline std::vector<BlockGradError> compare_gradients(
    const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
    const std::vector<ParamBlock>& blocks) {
  if (analytic.size() != numeric.size())
    throw std::invalid_argument("compare_gradients: size mismatch");
  std::vector<BlockGradError> out;
  for (const ParamBlock& b : blocks) {
    const auto ga = analytic.segment(b.offset, b.size());
    const auto gn = numeric.segment(b.offset, b.size());
    const double denom = std::max(ga.norm() + gn.norm(), 1e-12);
    out.push_back({b.name, (ga - gn).norm() / denom});
  }
  return out;
}

struct GradCheckCase {
  NetworkShape shape;
  int batch = 0;
  std::vector<BlockGradError> blocks;
  double worst = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;
  double worst = 0.0;
  double tolerance = 1e-4;
  bool passed = false;
};

inline GradCheckCase run_gradcheck_case(std::uint64_t seed) {
  RandomStream rng(seed);

  GradCheckCase result;
  result.shape.input_dim = 4 + static_cast<int>(rng.uniform_index(5));
  const int layers = 1 + static_cast<int>(rng.uniform_index(2));
  for (int l = 0; l < layers; ++l)
    result.shape.hidden.push_back(16 + static_cast<int>(rng.uniform_index(17)));
  result.shape.action_dim = 2 + static_cast<int>(rng.uniform_index(3));
  result.batch = 8;

  ActorCritic net(result.shape, rng.next_u64());
  {
    auto ls = net.log_std();
    for (Eigen::Index j = 0; j < ls.size(); ++j) ls[j] = rng.uniform(-0.5, 0.3);
  }

  const int m = result.batch, in = result.shape.input_dim,
            a_dim = result.shape.action_dim;
  Eigen::MatrixXd obs(m, in), actions(m, a_dim);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < in; ++c) obs(r, c) = rng.gaussian();
    for (int c = 0; c < a_dim; ++c) actions(r, c) = rng.gaussian();
  }
  // old log-probs near (but not at) the current ones, so the ratio varies;
  // they are constants of the loss, not functions of the parameters
  Eigen::VectorXd values(m);
  const Eigen::MatrixXd means = net.forward(obs, values, nullptr);
  Eigen::VectorXd old_lp =
      gaussian_log_prob_batch(means, net.log_std(), actions);
  Eigen::VectorXd advantages(m), returns(m);
  for (int r = 0; r < m; ++r) {
    old_lp[r] += rng.uniform(-0.3, 0.3);
    advantages[r] = rng.gaussian();
    returns[r] = rng.gaussian();
  }

  const double clip = 1e9;  // smooth regime: surrogate branches coincide
  const double value_coef = 0.5, entropy_coef = 0.01;
  auto loss_at = [&]() {
    net.zero_grads();
    return ppo_loss_and_grad(net, obs, actions, old_lp, advantages, returns,
                             clip, value_coef, entropy_coef)
        .total;
  };

  loss_at();
  const Eigen::VectorXd analytic = net.grads();

  const double h = 1e-5;
  Eigen::VectorXd numeric(net.parameter_count());
  for (Eigen::Index i = 0; i < net.parameter_count(); ++i) {
    const double saved = net.params()[i];
    net.params()[i] = saved + h;
    const double up = loss_at();
    net.params()[i] = saved - h;
    const double down = loss_at();
    net.params()[i] = saved;
    numeric[i] = (up - down) / (2.0 * h);
  }
  net.zero_grads();

  result.blocks = compare_gradients(analytic, numeric, net.blocks());
  for (const auto& b : result.blocks) result.worst = std::max(result.worst, b.error);
  return result;
}

inline GradCheckReport run_gradcheck(std::uint64_t seed, int cases = 20,
                                     double tolerance = 1e-4) {
  GradCheckReport report;
  report.tolerance = tolerance;
  for (int k = 0; k < cases; ++k) {
    report.cases.push_back(run_gradcheck_case(derive_seed(seed, k)));
    report.worst = std::max(report.worst, report.cases.back().worst);
  }
  report.passed = report.worst < tolerance;
  return report;
}

}  // namespace catrl
