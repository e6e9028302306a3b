#pragma once

// Diagonal-Gaussian action head and observation normalization.
//
// The policy is N(mean(obs), diag(exp(log_std))^2) with a state-independent
// log-std vector owned by the network.  Log-prob / entropy are exact closed
// forms; their gradients w.r.t. mean and log_std are used by the learner.

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "catrl/mlp.hpp"
#include "catrl/random.hpp"

namespace catrl {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

struct ActionSample {
  Eigen::VectorXd action;
  double log_prob = 0.0;
};

inline double gaussian_log_prob(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                const Eigen::Ref<const Eigen::VectorXd>& log_std,
                                const Eigen::Ref<const Eigen::VectorXd>& action) {
  if (mean.size() != log_std.size() || mean.size() != action.size())
    throw std::invalid_argument("gaussian_log_prob: size mismatch");
  double lp = 0.0;
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    const double z = (action[j] - mean[j]) * std::exp(-log_std[j]);
    lp += -0.5 * z * z - log_std[j] - kHalfLog2Pi;
  }
  return lp;
}

// log-probs for a row batch: means/actions are N x A
inline Eigen::VectorXd gaussian_log_prob_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& means,
    const Eigen::Ref<const Eigen::VectorXd>& log_std,
    const Eigen::Ref<const Eigen::MatrixXd>& actions) {
  const Eigen::Index n = means.rows(), a = means.cols();
  if (actions.rows() != n || actions.cols() != a || log_std.size() != a)
    throw std::invalid_argument("gaussian_log_prob_batch: size mismatch");
  Eigen::VectorXd lp = Eigen::VectorXd::Constant(
      n, -a * kHalfLog2Pi - log_std.sum());
  for (Eigen::Index j = 0; j < a; ++j) {
    const double inv_std = std::exp(-log_std[j]);
    lp.array() -=
        0.5 * ((actions.col(j) - means.col(j)) * inv_std).array().square();
  }
  return lp;
}

// entropy of the diagonal Gaussian; independent of the state
inline double gaussian_entropy(const Eigen::Ref<const Eigen::VectorXd>& log_std) {
  return log_std.sum() + log_std.size() * (0.5 + kHalfLog2Pi);
}

inline ActionSample sample_action(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                  const Eigen::Ref<const Eigen::VectorXd>& log_std,
                                  RandomStream& rng) {
  ActionSample s;
  s.action.resize(mean.size());
  for (Eigen::Index j = 0; j < mean.size(); ++j)
    s.action[j] = mean[j] + std::exp(log_std[j]) * rng.gaussian();
  s.log_prob = gaussian_log_prob(mean, log_std, s.action);
  return s;
}

// Running mean/variance over observation components (parallel Welford merge).
// When disabled it is the identity.  Normalized values are clipped to +-10 so
// a fresh run with degenerate variance cannot blow up the network inputs.
class ObservationNormalizer {
 public:
  ObservationNormalizer() = default;
  ObservationNormalizer(int dim, bool enabled)
      : enabled_(enabled),
        mean_(Eigen::VectorXd::Zero(dim)),
        var_(Eigen::VectorXd::Ones(dim)),
        count_(0.0) {}

  bool enabled() const { return enabled_; }
  int dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& variance() const { return var_; }
  double count() const { return count_; }

  void update(const Eigen::Ref<const Eigen::MatrixXd>& batch) {
    if (!enabled_ || batch.rows() == 0) return;
    if (batch.cols() != mean_.size())
      throw std::invalid_argument("normalizer: wrong observation width");
    const double n_b = static_cast<double>(batch.rows());
    const Eigen::VectorXd mean_b = batch.colwise().mean();
    Eigen::VectorXd var_b(batch.cols());
    for (Eigen::Index j = 0; j < batch.cols(); ++j)
      var_b[j] = (batch.col(j).array() - mean_b[j]).square().sum() / n_b;
    if (count_ <= 0.0) {
      mean_ = mean_b;
      var_ = var_b;
      count_ = n_b;
      return;
    }
    const double total = count_ + n_b;
    const Eigen::VectorXd delta = mean_b - mean_;
    mean_ += delta * (n_b / total);
    var_ = (var_ * count_ + var_b * n_b).eval() / total +
           delta.cwiseProduct(delta) * (count_ * n_b / (total * total));
    count_ = total;
  }

  Eigen::VectorXd normalize(const Eigen::Ref<const Eigen::VectorXd>& obs) const {
    if (!enabled_ || count_ <= 0.0) return obs;
    Eigen::VectorXd out(obs.size());
    for (Eigen::Index j = 0; j < obs.size(); ++j)
      out[j] = clip((obs[j] - mean_[j]) / std::sqrt(var_[j] + 1e-8));
    return out;
  }

  Eigen::MatrixXd normalize_batch(const Eigen::Ref<const Eigen::MatrixXd>& obs) const {
    if (!enabled_ || count_ <= 0.0) return obs;
    Eigen::MatrixXd out(obs.rows(), obs.cols());
    for (Eigen::Index j = 0; j < obs.cols(); ++j) {
      const double inv = 1.0 / std::sqrt(var_[j] + 1e-8);
      out.col(j) = ((obs.col(j).array() - mean_[j]) * inv)
                       .cwiseMax(-10.0)
                       .cwiseMin(10.0);
    }
    return out;
  }

  // checkpoint restore path
  void restore(Eigen::VectorXd mean, Eigen::VectorXd var, double count, bool enabled) {
    mean_ = std::move(mean);
    var_ = std::move(var);
    count_ = count;
    enabled_ = enabled;
  }

 private:
  static double clip(double v) { return std::min(10.0, std::max(-10.0, v)); }

  bool enabled_ = false;
  Eigen::VectorXd mean_, var_;
  double count_ = 0.0;
};

}  // namespace catrl
