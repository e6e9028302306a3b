#pragma once

// Environment-facing step contract shared by the simulator, the chain-MDP
// testbed and any stub environment the tests build.  The rollout collector is
// templated over this interface.

#include <array>
#include <concepts>
#include <vector>

#include <Eigen/Core>

namespace catrl {

struct RewardBreakdown {
  double task = 0.0;
  double power = 0.0;
  double total = 0.0;  // weighted sum handed to the learner (pre-attenuation)
};

struct TrackingErrors {
  double position = 0.0;  // m (norm, not squared)
  double rotation = 0.0;  // rad
};

struct EnvStep {
  Eigen::VectorXd observation;           // state after the step, before any reset
  double raw_reward = 0.0;               // == rewards.total
  std::vector<double> constraint_signals;  // raw signals in the engine's order
  bool truncated = false;                // episode time limit reached
  bool fault = false;                    // non-finite state detected
  RewardBreakdown rewards;
  TrackingErrors errors;
  std::array<double, 2> foot_forces = {0.0, 0.0};
};

template <class E>
concept EnvLike = requires(E e, const Eigen::VectorXd& action) {
  { e.observation_dim() } -> std::convertible_to<int>;
  { e.action_dim() } -> std::convertible_to<int>;
  { e.reset() } -> std::convertible_to<Eigen::VectorXd>;
  { e.step(action) } -> std::convertible_to<EnvStep>;
  { e.episode_step() } -> std::convertible_to<int>;
};

}  // namespace catrl
