#pragma once

// Planar lunar locomanipulation environment.
//
// Physics runs at 200 Hz (dt = 5 ms), the policy at 100 Hz (two substeps per
// step), episodes last 10 s unless terminated.  The base is a rigid body in
// the x-z plane; legs and arm are massless chains with reflected-inertia
// joints.  Ground contact is a penalty spring-damper with saturated Coulomb
// friction at the feet.  Integration is symplectic with an exact
// constant-acceleration position term:
//
//     x += v dt + a dt^2 / 2;   v += a dt
//
// so free flight matches the ballistic closed form to round-off.
//
// Per policy step the environment returns the observation (39 components,
// layout below), the shaped reward and the 11 raw constraint signals in the
// canonical order (see constraint_names()).  Signals that can spike between
// policy samples (torque excess, non-foot penetration, foot impact force)
// report the worst substep; the remaining signals read the end-of-step state.
//
// Observation layout (noise scale in parentheses, zero-mean Gaussian):
//   [0:2)   gravity direction in body frame = (-sin pitch, -cos pitch) (0.02)
//   [2:4)   base linear velocity in body frame (0.05)
//   [4]     pitch rate (0.05)
//   [5:11)  joint positions (0.01)
//   [11:17) joint velocities (0.1)
//   [17:23) previous action (exact)
//   [23:25) foot contact flags (exact)
//   [25:36) terrain height relative to base at 11 points spanning
//           [-0.5, +0.5] m along the body x-axis (0.01)
//   [36:39) command in body frame: position delta, wrapped angle delta (exact)

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "catrl/constraints.hpp"
#include "catrl/env_types.hpp"
#include "catrl/geometry.hpp"
#include "catrl/random.hpp"
#include "catrl/rewards.hpp"
#include "catrl/robot.hpp"
#include "catrl/terrain.hpp"

namespace catrl {

struct NoiseScales {
  double gravity = 0.02;
  double lin_vel = 0.05;
  double ang_vel = 0.05;
  double joint_pos = 0.01;
  double joint_vel = 0.1;
  double height_scan = 0.01;
};

struct RandomizationConfig {
  double mass_fraction = 0.1;       // base mass scaled by 1 + U(-f, f) per episode
  double max_action_delay = 0.04;   // s; per-episode delay ~ U(0, max)
  // Desk-scale command box.  The x range straddles the arm's reach: close
  // commands land inside the placement gate's keep-out radius so the base
  // must step aside, far ones need a lean or shuffle plus full extension.
  // The z floor keeps commanded poses clear of terrain bumps so tracking
  // never has to flirt with ground contact.
  double command_x_range = 0.55;    // m around the reset base position
  double command_z_min = 0.25;      // m above terrain at the target x
  double command_z_max = 0.6;
  double command_angle_range = kPi / 6.0;  // rad around the default EE angle
  bool regenerate_terrain = true;   // fresh terrain field each episode
};

struct CommandPose {
  double x = 0.0;
  double z = 0.0;
  double angle = 0.0;  // world-frame end-effector angle
};

struct SimState {
  Eigen::Vector2d base_pos = {0.0, 0.0};  // COM world position (x, z)
  double pitch = 0.0;
  Eigen::Vector2d base_vel = {0.0, 0.0};
  double pitch_rate = 0.0;
  std::array<double, kNumJoints> q = {};
  std::array<double, kNumJoints> qd = {};
};

// draws three uniforms, in order: x offset, z offset, angle offset
template <class Uniform01>
CommandPose sample_command(Uniform01&& u01, double base_x,
                           const TerrainField& terrain,
                           const RandomizationConfig& rc, double default_angle) {
  CommandPose c;
  c.x = base_x + (-rc.command_x_range + 2.0 * rc.command_x_range * u01());
  c.z = terrain.height(c.x) + rc.command_z_min +
        (rc.command_z_max - rc.command_z_min) * u01();
  c.angle = wrap_angle(default_angle - rc.command_angle_range +
                       2.0 * rc.command_angle_range * u01());
  return c;
}

class LunaEnv {
 public:
  static constexpr int kObsDim = 39;
  static constexpr int kNumConstraints = 11;
  static constexpr double kPhysicsDt = 0.005;  // 200 Hz
  static constexpr int kSubsteps = 2;          // -> 100 Hz policy
  static constexpr int kScanPoints = 11;

  // canonical constraint order; the engine registers these same names
  static const std::array<const char*, kNumConstraints>& constraint_names() {
    static const std::array<const char*, kNumConstraints> names = {
        "c_qj", "c_qdj", "c_tauj", "c_v", "c_rot", "c_fstd",
        "c_contact", "c_fall", "c_hmin", "c_hmax", "c_fmax"};
    return names;
  }

  // default constraint table: six soft rows under curriculum, five hard rows
  static std::vector<ConstraintSpec> default_constraints() {
    using K = ConstraintKind;
    const double end = 0.6;
    return {
        {"c_qj", K::kSoft, 0.0, 0.05, 0.9, end},
        {"c_qdj", K::kSoft, 0.0, 0.05, 0.9, end},
        {"c_tauj", K::kSoft, 0.0, 0.05, 0.25, end},
        {"c_v", K::kSoft, 0.25, 0.05, 0.25, end},
        {"c_rot", K::kSoft, 0.3, 0.05, 0.9, end},
        {"c_fstd", K::kSoft, 15.0, 0.05, 0.25, end},
        {"c_contact", K::kHard, 0.0, 1.0, 1.0, end},
        {"c_fall", K::kHard, kPi / 2.0, 1.0, 1.0, end},
        {"c_hmin", K::kHard, 0.0, 1.0, 1.0, end},
        {"c_hmax", K::kHard, 0.0, 1.0, 1.0, end},
        {"c_fmax", K::kHard, 60.0, 1.0, 1.0, end},
    };
  }

  LunaEnv(RobotModel model, TerrainParams terrain_params, RewardParams rewards,
          std::map<std::string, double> reward_weights, NoiseScales noise,
          RandomizationConfig randomization, double time_limit_s,
          std::uint64_t seed)
      : model_(std::move(model)),
        terrain_params_(std::move(terrain_params)),
        reward_params_(rewards),
        reward_weights_(std::move(reward_weights)),
        noise_(noise),
        randomization_(randomization),
        steps_limit_(static_cast<int>(std::round(time_limit_s / policy_dt()))),
        rng_(seed) {
    model_.validate();
    terrain_params_.validate();
    terrain_ = TerrainField::generate(rng_.next_u64(), terrain_params_);
    mass_current_ = model_.base_mass;
    active_target_ = model_.default_joint_pos;
    slewed_target_ = model_.default_joint_pos;
  }

  int observation_dim() const { return kObsDim; }
  int action_dim() const { return kNumJoints; }
  int episode_step() const { return episode_steps_; }
  double episode_time() const { return episode_steps_ * policy_dt(); }
  static constexpr double policy_dt() { return kPhysicsDt * kSubsteps; }

  const RobotModel& model() const { return model_; }
  const TerrainField& terrain() const { return terrain_; }
  const SimState& state() const { return state_; }
  const CommandPose& command() const { return command_; }
  double current_mass() const { return mass_current_; }
  double action_delay() const { return action_delay_; }
  const std::array<double, 2>& last_foot_normals() const { return foot_normal_; }
  const std::array<double, 2>& filtered_foot_forces() const { return foot_force_filt_; }
  const std::array<double, kNumJoints>& last_torques() const { return torques_; }

  // --- test hooks ------------------------------------------------------- //
  void set_state(const SimState& s) { state_ = s; }
  void set_command(const CommandPose& c) { command_ = c; }

  // ---------------------------------------------------------------------- //

  Eigen::VectorXd reset() {
    if (randomization_.regenerate_terrain)
      terrain_ = TerrainField::generate(rng_.next_u64(), terrain_params_);
    const double f = randomization_.mass_fraction;
    mass_current_ = model_.base_mass * (1.0 + rng_.uniform(-f, f));
    action_delay_ = rng_.uniform(0.0, randomization_.max_action_delay);

    state_ = SimState{};
    state_.q = model_.default_joint_pos;
    // drop the base so the default-stance feet rest on the terrain
    double ground = -1e9;
    for (int leg = 0; leg < 2; ++leg) {
      const Eigen::Vector2d fb = foot_body(leg);
      ground = std::max(ground, terrain_.height(fb.x()) - fb.y());
    }
    state_.base_pos = {0.0, ground};

    pending_targets_.clear();
    active_target_ = model_.default_joint_pos;
    slewed_target_ = model_.default_joint_pos;
    prev_action_.setZero(kNumJoints);
    torques_ = {};
    foot_normal_ = {};
    foot_force_filt_ = {};
    max_tau_excess_ = 0.0;
    max_nonfoot_penetration_ = 0.0;
    max_foot_normal_ = 0.0;
    fault_ = false;

    // settle under the default-pose PD hold so episodes start at equilibrium
    for (int i = 0; i < kSettleSubsteps; ++i)
      apply_substep(pd_torques(model_.default_joint_pos));
    max_tau_excess_ = 0.0;
    max_nonfoot_penetration_ = 0.0;
    max_foot_normal_ = 0.0;

    command_ = sample_command([this] { return rng_.uniform01(); },
                              state_.base_pos.x(), terrain_, randomization_,
                              default_ee_angle());
    episode_steps_ = 0;
    return build_observation();
  }

  EnvStep step(const Eigen::VectorXd& raw_action) {
    if (raw_action.size() != kNumJoints)
      throw std::invalid_argument("step: wrong action size");
    Eigen::VectorXd a = raw_action.cwiseMax(-model_.action_clip).cwiseMin(model_.action_clip);
    std::array<double, kNumJoints> target;
    for (int j = 0; j < kNumJoints; ++j)
      target[j] = model_.default_joint_pos[j] + model_.action_scale(j) * a[j];
    pending_targets_.push_back({episode_time() + action_delay_, target});

    max_tau_excess_ = 0.0;
    max_nonfoot_penetration_ = 0.0;
    max_foot_normal_ = 0.0;
    for (int k = 0; k < kSubsteps; ++k) {
      const double now = episode_time() + k * kPhysicsDt;
      while (!pending_targets_.empty() && pending_targets_.front().activate_time <= now + 1e-12) {
        active_target_ = pending_targets_.front().target;
        pending_targets_.pop_front();
      }
      track_target();
      apply_substep(pd_torques(slewed_target_));
    }
    prev_action_ = a;
    ++episode_steps_;

    EnvStep out;
    out.truncated = episode_steps_ >= steps_limit_;
    out.fault = fault_;

    // task rewards from the end-of-step end-effector pose
    const auto [ee_pos, ee_angle] = ee_pose();
    const Eigen::Vector2d cmd_pos(command_.x, command_.z);
    const double e_pos = position_error(ee_pos, cmd_pos);
    const double e_rot = orientation_error(ee_angle, command_.angle);
    const double d_base = std::abs(state_.base_pos.x() - command_.x);
    const double r_pose = pose_reward(e_pos, e_rot, reward_params_);
    const double gate = base_gate(d_base, reward_params_);
    const double r_base = base_reward(d_base, reward_params_);
    out.rewards.task = task_reward(r_pose, gate, r_base);
    out.rewards.power = power_reward(
        std::span<const double>(state_.qd.data(), kNumJoints),
        std::span<const double>(torques_.data(), kNumJoints),
        model_.partition(), reward_params_);
    out.rewards.total = total_step_reward(
        {{"task", out.rewards.task}, {"power", out.rewards.power}}, reward_weights_);
    out.raw_reward = out.rewards.total;
    out.errors.position = std::sqrt(e_pos);
    out.errors.rotation = e_rot;
    out.foot_forces = foot_normal_;
    out.constraint_signals = constraint_signals();
    out.observation = build_observation();
    if (!out.observation.allFinite()) {
      out.fault = true;
      out.observation.setZero();
    }
    return out;
  }

  // Raw signals in canonical order.  Group signals fold per-joint thresholds
  // (so their table limit is 0); margin signals bake the model's clearance
  // bounds in; scalar signals are thresholded by the constraint table.
  std::vector<double> constraint_signals() const {
    std::vector<double> s(kNumConstraints);
    double q_excess = -1e9, qd_excess = -1e9;
    for (int j = 0; j < kNumJoints; ++j) {
      q_excess = std::max(q_excess, std::abs(state_.q[j]) - model_.q_limit(j));
      qd_excess = std::max(qd_excess, std::abs(state_.qd[j]) - model_.qd_limit);
    }
    const double clearance = state_.base_pos.y() - terrain_.height(state_.base_pos.x());
    const double fstd = std::abs(foot_force_filt_[0] - foot_force_filt_[1]) / 2.0;
    s[0] = q_excess;
    s[1] = qd_excess;
    s[2] = max_tau_excess_;
    s[3] = state_.base_vel.norm();
    s[4] = std::abs(state_.pitch);
    s[5] = fstd;
    s[6] = max_nonfoot_penetration_;
    s[7] = std::abs(state_.pitch);
    s[8] = model_.h_min - clearance;
    s[9] = clearance - model_.h_max;
    s[10] = max_foot_normal_;
    return s;
  }

  // advance the PD reference toward the active command at the drive's slew rate
  void track_target() {
    if (model_.target_slew_rate <= 0.0) {
      slewed_target_ = active_target_;
      return;
    }
    const double max_step = model_.target_slew_rate * kPhysicsDt;
    for (int j = 0; j < kNumJoints; ++j) {
      const double d = active_target_[j] - slewed_target_[j];
      slewed_target_[j] += std::clamp(d, -max_step, max_step);
    }
  }

  std::array<double, kNumJoints> pd_torques(const std::array<double, kNumJoints>& target) const {
    std::array<double, kNumJoints> tau;
    for (int j = 0; j < kNumJoints; ++j) {
      const double t = model_.kp(j) * (target[j] - state_.q[j]) - model_.kd(j) * state_.qd[j];
      tau[j] = std::min(model_.tau_abs(j), std::max(-model_.tau_abs(j), t));
    }
    return tau;
  }

  // One physics substep under the given joint torques.  Public so tests can
  // drive the dynamics directly (ballistic flight, settling, energy checks).
  void apply_substep(const std::array<double, kNumJoints>& tau) {
    const double dt = kPhysicsDt;
    torques_ = tau;

    // contact forces at the feet (world frame), evaluated on the current state
    Eigen::Vector2d force_sum(0.0, 0.0);
    double moment_sum = 0.0;
    std::array<Eigen::Vector2d, 2> foot_force = {Eigen::Vector2d::Zero(),
                                                 Eigen::Vector2d::Zero()};
    std::array<Eigen::Matrix2d, 2> jac_world;
    for (int leg = 0; leg < 2; ++leg) {
      const Eigen::Vector2d fb = foot_body(leg);
      const Eigen::Vector2d fw = state_.base_pos + world_from_body(state_.pitch, fb);
      const Eigen::Matrix2d jb = leg_jacobian_body(leg);
      Eigen::Matrix2d jw;
      jw.col(0) = world_from_body(state_.pitch, Eigen::Vector2d(jb.col(0)));
      jw.col(1) = world_from_body(state_.pitch, Eigen::Vector2d(jb.col(1)));
      jac_world[leg] = jw;
      const double penetration = terrain_.height(fw.x()) - fw.y();
      foot_normal_[leg] = 0.0;
      if (penetration > 0.0) {
        const Eigen::Vector2d rel = fw - state_.base_pos;
        const Eigen::Vector2d qd_leg(state_.qd[2 * leg], state_.qd[2 * leg + 1]);
        const Eigen::Vector2d vel = state_.base_vel +
                                    state_.pitch_rate * Eigen::Vector2d(-rel.y(), rel.x()) +
                                    jw * qd_leg;
        const double separation_rate = vel.y() - terrain_.slope(fw.x()) * vel.x();
        const double normal = std::max(
            0.0, model_.contact_stiffness * penetration -
                     model_.contact_damping * separation_rate);
        const double sat = std::min(1.0, std::max(-1.0, vel.x() / model_.slip_velocity));
        const Eigen::Vector2d f(-model_.friction * normal * sat, normal);
        foot_force[leg] = f;
        foot_normal_[leg] = normal;
        force_sum += f;
        moment_sum += rel.x() * f.y() - rel.y() * f.x();
        max_foot_normal_ = std::max(max_foot_normal_, normal);
      }
      foot_force_filt_[leg] +=
          (dt / model_.foot_filter_tau) * (foot_normal_[leg] - foot_force_filt_[leg]);
    }

    // non-foot collision points: base box corners, knees, end-effector tip
    for (const Eigen::Vector2d& pb : collision_points()) {
      const Eigen::Vector2d pw = state_.base_pos + world_from_body(state_.pitch, pb);
      max_nonfoot_penetration_ =
          std::max(max_nonfoot_penetration_, terrain_.height(pw.x()) - pw.y());
    }

    // base: gravity + contact forces; arm actuation reacts on the pitch
    force_sum.y() -= mass_current_ * model_.gravity;
    moment_sum -= tau[kArm1] + tau[kArm2];
    const Eigen::Vector2d base_acc = force_sum / mass_current_;
    const double pitch_acc = moment_sum / model_.base_inertia;

    // joints: reflected inertia plus contact loading through the Jacobian
    std::array<double, kNumJoints> qdd;
    for (int leg = 0; leg < 2; ++leg) {
      const Eigen::Vector2d gen = jac_world[leg].transpose() * foot_force[leg];
      qdd[2 * leg] = (tau[2 * leg] + gen.x()) / model_.joint_inertia(2 * leg);
      qdd[2 * leg + 1] = (tau[2 * leg + 1] + gen.y()) / model_.joint_inertia(2 * leg + 1);
    }
    qdd[kArm1] = tau[kArm1] / model_.joint_inertia(kArm1);
    qdd[kArm2] = tau[kArm2] / model_.joint_inertia(kArm2);

    for (int j = 0; j < kNumJoints; ++j) {
      max_tau_excess_ =
          std::max(max_tau_excess_, std::abs(tau[j]) - model_.tau_nominal(j));
    }

    // symplectic update with exact constant-acceleration position term
    state_.base_pos += state_.base_vel * dt + 0.5 * base_acc * dt * dt;
    state_.base_vel += base_acc * dt;
    state_.pitch += state_.pitch_rate * dt + 0.5 * pitch_acc * dt * dt;
    state_.pitch_rate += pitch_acc * dt;
    for (int j = 0; j < kNumJoints; ++j) {
      state_.q[j] += state_.qd[j] * dt + 0.5 * qdd[j] * dt * dt;
      state_.qd[j] += qdd[j] * dt;
      const double stop = model_.q_limit(j) + model_.joint_stop_tolerance;
      if (state_.q[j] > stop) {
        state_.q[j] = stop;
        if (state_.qd[j] > 0.0) state_.qd[j] = 0.0;
      } else if (state_.q[j] < -stop) {
        state_.q[j] = -stop;
        if (state_.qd[j] < 0.0) state_.qd[j] = 0.0;
      }
    }
    if (!std::isfinite(state_.base_pos.x()) || !std::isfinite(state_.base_pos.y()) ||
        !std::isfinite(state_.pitch) || !std::isfinite(state_.base_vel.x()) ||
        !std::isfinite(state_.base_vel.y()) || !std::isfinite(state_.pitch_rate))
      fault_ = true;
    for (int j = 0; j < kNumJoints; ++j)
      if (!std::isfinite(state_.q[j]) || !std::isfinite(state_.qd[j])) fault_ = true;
  }

  // --- kinematics -------------------------------------------------------- //

  Eigen::Vector2d hip_body(int leg) const {
    return {(leg == 0 ? -0.5 : 0.5) * model_.hip_spacing, 0.0};
  }

  // leg joint angles: q[2*leg] from straight down, knee relative
  Eigen::Vector2d foot_body(int leg) const {
    const double q1 = state_.q[2 * leg], q12 = q1 + state_.q[2 * leg + 1];
    return hip_body(leg) +
           model_.thigh_length * Eigen::Vector2d(std::sin(q1), -std::cos(q1)) +
           model_.shank_length * Eigen::Vector2d(std::sin(q12), -std::cos(q12));
  }

  Eigen::Vector2d knee_body(int leg) const {
    const double q1 = state_.q[2 * leg];
    return hip_body(leg) +
           model_.thigh_length * Eigen::Vector2d(std::sin(q1), -std::cos(q1));
  }

  // d foot_body / d (hip, knee)
  Eigen::Matrix2d leg_jacobian_body(int leg) const {
    const double q1 = state_.q[2 * leg], q12 = q1 + state_.q[2 * leg + 1];
    Eigen::Matrix2d j;
    const Eigen::Vector2d thigh(std::cos(q1), std::sin(q1));
    const Eigen::Vector2d shank(std::cos(q12), std::sin(q12));
    j.col(0) = model_.thigh_length * thigh + model_.shank_length * shank;
    j.col(1) = model_.shank_length * shank;
    return j;
  }

  // arm angles measured from the body x-axis, second link relative
  Eigen::Vector2d ee_body() const {
    const double a1 = state_.q[kArm1], a12 = a1 + state_.q[kArm2];
    return Eigen::Vector2d(model_.arm_mount_x, model_.arm_mount_z) +
           model_.arm_link1 * Eigen::Vector2d(std::cos(a1), std::sin(a1)) +
           model_.arm_link2 * Eigen::Vector2d(std::cos(a12), std::sin(a12));
  }

  std::pair<Eigen::Vector2d, double> ee_pose() const {
    const Eigen::Vector2d pos = state_.base_pos + world_from_body(state_.pitch, ee_body());
    const double angle = wrap_angle(state_.pitch + state_.q[kArm1] + state_.q[kArm2]);
    return {pos, angle};
  }

  double default_ee_angle() const {
    return wrap_angle(model_.default_joint_pos[kArm1] + model_.default_joint_pos[kArm2]);
  }

  double base_clearance() const {
    return state_.base_pos.y() - terrain_.height(state_.base_pos.x());
  }

  Eigen::VectorXd build_observation() {
    Eigen::VectorXd obs(kObsDim);
    int i = 0;
    const double g_noise = noise_.gravity, v_noise = noise_.lin_vel;
    obs[i++] = -std::sin(state_.pitch) + g_noise * rng_.gaussian();
    obs[i++] = -std::cos(state_.pitch) + g_noise * rng_.gaussian();
    const Eigen::Vector2d v_body = body_from_world(state_.pitch, state_.base_vel);
    obs[i++] = v_body.x() + v_noise * rng_.gaussian();
    obs[i++] = v_body.y() + v_noise * rng_.gaussian();
    obs[i++] = state_.pitch_rate + noise_.ang_vel * rng_.gaussian();
    for (int j = 0; j < kNumJoints; ++j)
      obs[i++] = state_.q[j] + noise_.joint_pos * rng_.gaussian();
    for (int j = 0; j < kNumJoints; ++j)
      obs[i++] = state_.qd[j] + noise_.joint_vel * rng_.gaussian();
    for (int j = 0; j < kNumJoints; ++j) obs[i++] = prev_action_[j];
    obs[i++] = foot_normal_[0] > 0.0 ? 1.0 : 0.0;
    obs[i++] = foot_normal_[1] > 0.0 ? 1.0 : 0.0;
    for (int k = 0; k < kScanPoints; ++k) {
      const double off = -0.5 + 0.1 * k;
      const double x = state_.base_pos.x() + off * std::cos(state_.pitch);
      obs[i++] = terrain_.height(x) - state_.base_pos.y() +
                 noise_.height_scan * rng_.gaussian();
    }
    const Eigen::Vector2d cmd_body = body_from_world(
        state_.pitch, Eigen::Vector2d(command_.x, command_.z) - state_.base_pos);
    obs[i++] = cmd_body.x();
    obs[i++] = cmd_body.y();
    obs[i++] = wrap_angle(command_.angle - state_.pitch);
    return obs;
  }

 private:
  static constexpr int kSettleSubsteps = 60;  // 0.3 s of PD hold per reset

  struct DelayedTarget {
    double activate_time;
    std::array<double, kNumJoints> target;
  };

  std::vector<Eigen::Vector2d> collision_points() const {
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(7);
    pts.emplace_back(-model_.base_half_x, -model_.base_half_z);
    pts.emplace_back(model_.base_half_x, -model_.base_half_z);
    pts.emplace_back(-model_.base_half_x, model_.base_half_z);
    pts.emplace_back(model_.base_half_x, model_.base_half_z);
    pts.push_back(knee_body(0));
    pts.push_back(knee_body(1));
    pts.push_back(ee_body());
    return pts;
  }

  RobotModel model_;
  TerrainParams terrain_params_;
  RewardParams reward_params_;
  std::map<std::string, double> reward_weights_;
  NoiseScales noise_;
  RandomizationConfig randomization_;
  int steps_limit_ = 1000;
  RandomStream rng_;

  TerrainField terrain_;
  SimState state_;
  CommandPose command_;
  double mass_current_ = 0.0;
  double action_delay_ = 0.0;
  std::deque<DelayedTarget> pending_targets_;
  std::array<double, kNumJoints> active_target_ = {};
  std::array<double, kNumJoints> slewed_target_ = {};
  Eigen::VectorXd prev_action_ = Eigen::VectorXd::Zero(kNumJoints);
  std::array<double, kNumJoints> torques_ = {};
  std::array<double, 2> foot_normal_ = {};
  std::array<double, 2> foot_force_filt_ = {};
  double max_tau_excess_ = 0.0;
  double max_nonfoot_penetration_ = 0.0;
  double max_foot_normal_ = 0.0;
  int episode_steps_ = 0;
  bool fault_ = false;
};

}  // namespace catrl
