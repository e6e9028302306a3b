#pragma once

// Desk-scale planar locomanipulator: a floating base (x, z, pitch) with two
// 2-segment legs and a 2-link arm, six actuated joints total.
//
//   joint order: [hip_l, knee_l, hip_r, knee_r, arm_1, arm_2]
//
// Legs hang from hip pivots at +-hip_spacing/2 on the base x-axis; joint
// angle zero points straight down, knee angles are relative to the thigh.
// The arm is mounted on the base top; arm angles are measured from the body
// x-axis, the second relative to the first.  Links are massless - joints are
// modeled as reflected-inertia double integrators coupled to the base through
// contact-Jacobian transposes.

#include <array>
#include <cstddef>
#include <stdexcept>

#include <Eigen/Core>

#include "catrl/rewards.hpp"

namespace catrl {

inline constexpr int kNumJoints = 6;
inline constexpr int kHipL = 0, kKneeL = 1, kHipR = 2, kKneeR = 3, kArm1 = 4, kArm2 = 5;

struct RobotModel {
  double base_mass = 12.0;       // kg, randomized +-10% per episode
  double base_inertia = 0.3;     // kg m^2 about the COM
  double hip_spacing = 0.4;      // m between hip pivots
  double thigh_length = 0.22;    // m
  double shank_length = 0.22;    // m
  double arm_link1 = 0.30;       // m
  double arm_link2 = 0.25;       // m
  double arm_mount_x = 0.05;     // arm base in body frame, m
  double arm_mount_z = 0.08;
  double base_half_x = 0.25;     // collision box half-extents, m
  double base_half_z = 0.10;

  // Reflected (gear-side) inertia.  The leg value also sets the explicit-
  // integration stability margin against the tangential contact damper
  // (slope mu*N/slip_velocity through the foot Jacobian), so keep
  // mu*N/slip_velocity * |J_x|^2 * dt well below 2 * joint_inertia_leg.
  double joint_inertia_leg = 0.12;  // kg m^2
  double joint_inertia_arm = 0.03;

  double q_limit_leg = 2.0;   // rad
  double q_limit_arm = 2.6;   // rad
  double qd_limit = 15.0;     // rad/s, nominal (not enforced by the dynamics)
  double tau_nominal_leg = 20.0;  // N m, constraint threshold
  double tau_nominal_arm = 6.0;
  double tau_abs_factor = 1.5;    // actuator clip = factor * nominal

  double kp_leg = 40.0, kd_leg = 1.5;   // PD gains
  double kp_arm = 15.0, kd_arm = 0.6;

  std::array<double, kNumJoints> default_joint_pos = {0.35, -0.7, 0.35, -0.7, 0.8, -0.6};
  double action_scale_leg = 0.4;  // rad per unit action
  double action_scale_arm = 0.6;
  double action_clip = 3.0;       // raw actions clipped to +-action_clip

  // The PD controller tracks a slew-limited copy of the commanded target, as
  // a motor drive would: a stepped command ramps at this rate instead of
  // stepping the torque to the clamp, which bounds the impulse a single
  // policy action can drive into the ground.  Zero or negative disables.
  double target_slew_rate = 8.0;  // rad/s

  double gravity = 9.81 / 6.0;    // lunar, m/s^2

  // clearance bounds baked into the margin-style constraint signals
  // (thresholds of scalar signals such as speed or impact force live in the
  // constraint table instead)
  double h_min = 0.12;  // m
  double h_max = 0.55;

  // ground contact
  double contact_stiffness = 4000.0;  // N/m
  double contact_damping = 80.0;      // N s/m
  double friction = 0.8;
  double slip_velocity = 0.10;        // m/s, tangential saturation scale
  double foot_filter_tau = 0.05;      // s, low-pass for the force-spread signal

  // mechanical overtravel past the nominal joint limit before the hard stop
  double joint_stop_tolerance = 0.05;  // rad

  bool is_arm_joint(int j) const { return j >= kArm1; }
  double q_limit(int j) const { return is_arm_joint(j) ? q_limit_arm : q_limit_leg; }
  double tau_nominal(int j) const { return is_arm_joint(j) ? tau_nominal_arm : tau_nominal_leg; }
  double tau_abs(int j) const { return tau_abs_factor * tau_nominal(j); }
  double kp(int j) const { return is_arm_joint(j) ? kp_arm : kp_leg; }
  double kd(int j) const { return is_arm_joint(j) ? kd_arm : kd_leg; }
  double joint_inertia(int j) const {
    return is_arm_joint(j) ? joint_inertia_arm : joint_inertia_leg;
  }
  double action_scale(int j) const {
    return is_arm_joint(j) ? action_scale_arm : action_scale_leg;
  }

  JointPartition partition() const {
    return {{kHipL, kKneeL, kHipR, kKneeR}, {kArm1, kArm2}};
  }

  void validate() const {
    if (base_mass <= 0.0 || base_inertia <= 0.0)
      throw std::invalid_argument("robot: mass and inertia must be positive");
    if (thigh_length <= 0.0 || shank_length <= 0.0 || arm_link1 <= 0.0 || arm_link2 <= 0.0)
      throw std::invalid_argument("robot: link lengths must be positive");
    if (joint_inertia_leg <= 0.0 || joint_inertia_arm <= 0.0)
      throw std::invalid_argument("robot: joint inertias must be positive");
    if (tau_abs_factor < 1.0)
      throw std::invalid_argument("robot: tau_abs_factor must be >= 1");
    if (h_min >= h_max)
      throw std::invalid_argument("robot: need h_min < h_max");
    if (gravity <= 0.0)
      throw std::invalid_argument("robot: gravity must be positive");
  }
};

}  // namespace catrl
