#pragma once

// Whole-body pose-tracking reward kernels.
//
// The task term rewards the end-effector pose while gating on base placement:
//
//   r_pose = exp(-e_pos / sigma_pos) * exp(-e_rot / sigma_rot)
//   r_base = min(1, exp(-(d_base - r) / 0.5))        base proximity, clamped
//   g      = sigmoid(k * (d_base - r))               gate, opens outside r
//   r_task = r_pose * g * r_base
//
// e_pos is the squared position error, e_rot the shortest-arc angle.  The
// power term rewards low mechanical effort per actuator group:
//
//   r_power = w_legs * exp(-P_legs / mu_legs) + w_arm * exp(-P_arm / mu_arm)
//
// with P = sum over the group's joints of |qdot_j * tau_j|.

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "catrl/geometry.hpp"

namespace catrl {

struct RewardParams {
  double sigma_pos = 0.25;      // position-error length scale, m^2
  double sigma_rot = 0.5;       // rotation-error scale, rad
  double reach_radius = 0.6;    // r, m
  double gate_steepness = 10.0; // k, 1/m
  double base_length = 0.5;     // base proximity decay length, m
  double omega_legs = 0.1;      // power-term weights
  double omega_arm = 0.1;
  double mu_legs = 40.0;        // power scales, W
  double mu_arm = 10.0;
};

// squared norm of the position difference (componentwise, any dimension)
inline double position_error(const Eigen::Ref<const Eigen::VectorXd>& p,
                             const Eigen::Ref<const Eigen::VectorXd>& target) {
  if (p.size() != target.size())
    throw std::invalid_argument("position_error: dimension mismatch");
  return (p - target).squaredNorm();
}

inline double pose_reward(double e_pos, double e_rot, const RewardParams& rp) {
  if (e_pos < 0.0 || e_rot < 0.0)
    throw std::invalid_argument("pose_reward: negative error");
  return std::exp(-e_pos / rp.sigma_pos) * std::exp(-e_rot / rp.sigma_rot);
}

// opens (-> 1) as the base moves beyond the reach radius
inline double base_gate(double d_base, const RewardParams& rp) {
  return 1.0 / (1.0 + std::exp(-rp.gate_steepness * (d_base - rp.reach_radius)));
}

// proximity term; the clamp keeps it flat at 1 inside the reach radius
inline double base_reward(double d_base, const RewardParams& rp) {
  return std::min(1.0, std::exp(-(d_base - rp.reach_radius) / rp.base_length));
}

inline double task_reward(double r_pose, double gate, double r_base) {
  return r_pose * gate * r_base;
}

// joint index partition into the two actuator groups; must cover every joint
// exactly once
struct JointPartition {
  std::vector<std::size_t> legs;
  std::vector<std::size_t> arm;

  void validate(std::size_t joint_count) const {
    std::vector<int> seen(joint_count, 0);
    for (std::size_t j : legs) {
      if (j >= joint_count) throw std::invalid_argument("partition: index out of range");
      ++seen[j];
    }
    for (std::size_t j : arm) {
      if (j >= joint_count) throw std::invalid_argument("partition: index out of range");
      ++seen[j];
    }
    for (int c : seen)
      if (c != 1) throw std::invalid_argument("partition: joints must be covered exactly once");
  }
};

inline double power_reward(std::span<const double> joint_vels,
                           std::span<const double> joint_torques,
                           const JointPartition& split, const RewardParams& rp) {
  if (joint_vels.size() != joint_torques.size())
    throw std::invalid_argument("power_reward: size mismatch");
  split.validate(joint_vels.size());
  double p_legs = 0.0, p_arm = 0.0;
  for (std::size_t j : split.legs) p_legs += std::abs(joint_vels[j] * joint_torques[j]);
  for (std::size_t j : split.arm) p_arm += std::abs(joint_vels[j] * joint_torques[j]);
  return rp.omega_legs * std::exp(-p_legs / rp.mu_legs) +
         rp.omega_arm * std::exp(-p_arm / rp.mu_arm);
}

// weighted sum over named components; the two name sets must match exactly
inline double total_step_reward(const std::map<std::string, double>& components,
                                const std::map<std::string, double>& weights) {
  if (components.size() != weights.size())
    throw std::invalid_argument("total_step_reward: component/weight sets differ");
  double total = 0.0;
  for (const auto& [name, value] : components) {
    const auto it = weights.find(name);
    if (it == weights.end())
      throw std::invalid_argument("total_step_reward: unknown component '" + name + "'");
    total += it->second * value;
  }
  return total;
}

}  // namespace catrl
