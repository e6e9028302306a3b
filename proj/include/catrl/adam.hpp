#pragma once

// Adam with bias correction, applied to the network's flat parameter vector.

#include <cmath>
#include <stdexcept>
#include <string>

#include "catrl/mlp.hpp"

namespace catrl {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Scales gradients so their global L2 norm is at most `max_norm`.
// Returns the pre-clip norm.  max_norm <= 0 disables clipping.
inline double clip_grad_norm(Eigen::VectorXd& grads, double max_norm) {
  const double norm = grads.norm();
  if (max_norm > 0.0 && norm > max_norm && norm > 0.0)
    grads *= max_norm / norm;
  return norm;
}

// One Adam step over all parameters.  Gradients are validated (a non-finite
// gradient aborts with the offending block named) and zeroed afterwards.
inline void adam_step(ActorCritic& net, double lr, const AdamConfig& cfg = {}) {
  Eigen::VectorXd& g = net.grads();
  if (!g.allFinite()) {
    for (const auto& b : net.blocks()) {
      if (!g.segment(b.offset, b.size()).allFinite())
        throw std::runtime_error("adam_step: non-finite gradient in block '" +
                                 b.name + "'");
    }
    throw std::runtime_error("adam_step: non-finite gradient");
  }
  net.adam_step() += 1;
  const double t = static_cast<double>(net.adam_step());
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  Eigen::VectorXd& m = net.adam_m();
  Eigen::VectorXd& v = net.adam_v();
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
  net.params().array() -=
      lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon);
  g.setZero();
}

}  // namespace catrl
