#pragma once

// JSON run configuration.  A config file has exactly five top-level sections
//
//   environment  — time limit, robot model, terrain, noise, randomization
//   rewards      — kernel scales and the component weights
//   constraints  — the full 11-row constraint table (any order in the file;
//                  normalized to the canonical order on load)
//   learner      — PPO hyperparameters, network width, seed
//   output       — run directory, checkpoint cadence, metrics file name
//
// Every field inside a section is optional and falls back to the built-in
// default, but unknown keys and malformed values are hard errors, reported as
// "section.field: what went wrong".  dump_config() writes every field out
// explicitly, so load(dump(x)) == dump-stable.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "catrl/constraints.hpp"
#include "catrl/ppo.hpp"
#include "catrl/rewards.hpp"
#include "catrl/robot.hpp"
#include "catrl/sim.hpp"
#include "catrl/terrain.hpp"

namespace catrl {

using ordered_json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputConfig {
  std::string directory = "runs/default";
  int checkpoint_every = 200;  // iterations; 0 = only the final checkpoint
  std::string metrics_file = "metrics.csv";
};

struct FullConfig {
  double time_limit_s = 10.0;
  RobotModel robot;
  TerrainParams terrain;
  NoiseScales noise;
  RandomizationConfig randomization;

  RewardParams rewards;
  std::map<std::string, double> reward_weights = {{"task", 1.0}, {"power", 1.0}};

  std::vector<ConstraintSpec> constraints = LunaEnv::default_constraints();

  TrainingConfig learner;
  std::vector<int> hidden_layers = {128, 64, 32};

  OutputConfig output;
};

namespace detail {

// Reads one section's known fields with type checking and flags anything
// unknown, so typos fail loudly instead of silently using a default.
class SectionReader {
 public:
  SectionReader(const ordered_json& obj, std::string section)
      : obj_(obj), section_(std::move(section)) {
    if (!obj.is_object())
      throw ConfigError(section_ + ": expected an object");
  }

  void field(const char* key, double& out) {
    const ordered_json* v = fetch(key);
    if (!v) return;
    if (!v->is_number()) fail(key, "expected a number");
    out = v->get<double>();
  }

  void field(const char* key, int& out) {
    const ordered_json* v = fetch(key);
    if (!v) return;
    if (!v->is_number_integer()) fail(key, "expected an integer");
    out = v->get<int>();
  }

  void field(const char* key, std::uint64_t& out) {
    const ordered_json* v = fetch(key);
    if (!v) return;
    if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
    out = v->get<std::uint64_t>();
  }

  void field(const char* key, bool& out) {
    const ordered_json* v = fetch(key);
    if (!v) return;
    if (!v->is_boolean()) fail(key, "expected true or false");
    out = v->get<bool>();
  }

  void field(const char* key, std::string& out) {
    const ordered_json* v = fetch(key);
    if (!v) return;
    if (!v->is_string()) fail(key, "expected a string");
    out = v->get<std::string>();
  }

  void field(const char* key, std::vector<double>& out) {
    const ordered_json* v = fetch(key);
    if (!v) return;
    if (!v->is_array()) fail(key, "expected an array of numbers");
    std::vector<double> parsed;
    for (const auto& e : *v) {
      if (!e.is_number()) fail(key, "expected an array of numbers");
      parsed.push_back(e.get<double>());
    }
    out = std::move(parsed);
  }

  void field(const char* key, std::vector<int>& out) {
    const ordered_json* v = fetch(key);
    if (!v) return;
    if (!v->is_array()) fail(key, "expected an array of integers");
    std::vector<int> parsed;
    for (const auto& e : *v) {
      if (!e.is_number_integer()) fail(key, "expected an array of integers");
      parsed.push_back(e.get<int>());
    }
    out = std::move(parsed);
  }

  template <std::size_t N>
  void field(const char* key, std::array<double, N>& out) {
    const ordered_json* v = fetch(key);
    if (!v) return;
    if (!v->is_array() || v->size() != N)
      fail(key, "expected an array of " + std::to_string(N) + " numbers");
    for (std::size_t i = 0; i < N; ++i) {
      if (!(*v)[i].is_number()) fail(key, "expected an array of numbers");
      out[i] = (*v)[i].get<double>();
    }
  }

  void field(const char* key, std::map<std::string, double>& out) {
    const ordered_json* v = fetch(key);
    if (!v) return;
    if (!v->is_object()) fail(key, "expected an object of numbers");
    std::map<std::string, double> parsed;
    for (const auto& [k, e] : v->items()) {
      if (!e.is_number())
        throw ConfigError(section_ + "." + key + "." + k + ": expected a number");
      parsed[k] = e.get<double>();
    }
    out = std::move(parsed);
  }

  // nested object; returns nullptr when absent
  const ordered_json* object(const char* key) {
    const ordered_json* v = fetch(key);
    if (!v) return nullptr;
    if (!v->is_object()) fail(key, "expected an object");
    return v;
  }

  // call after all known fields were claimed
  void finish() const {
    for (const auto& [k, unused] : obj_.items())
      if (!seen_.count(k))
        throw ConfigError(section_ + "." + k + ": unknown field");
  }

 private:
  const ordered_json* fetch(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  [[noreturn]] void fail(const char* key, const std::string& msg) const {
    throw ConfigError(section_ + "." + key + ": " + msg);
  }

  const ordered_json& obj_;
  std::string section_;
  std::set<std::string> seen_;
};

inline void read_robot(const ordered_json& j, const std::string& section,
                       RobotModel& m) {
  SectionReader r(j, section);
  r.field("base_mass", m.base_mass);
  r.field("base_inertia", m.base_inertia);
  r.field("hip_spacing", m.hip_spacing);
  r.field("thigh_length", m.thigh_length);
  r.field("shank_length", m.shank_length);
  r.field("arm_link1", m.arm_link1);
  r.field("arm_link2", m.arm_link2);
  r.field("arm_mount_x", m.arm_mount_x);
  r.field("arm_mount_z", m.arm_mount_z);
  r.field("base_half_x", m.base_half_x);
  r.field("base_half_z", m.base_half_z);
  r.field("joint_inertia_leg", m.joint_inertia_leg);
  r.field("joint_inertia_arm", m.joint_inertia_arm);
  r.field("q_limit_leg", m.q_limit_leg);
  r.field("q_limit_arm", m.q_limit_arm);
  r.field("qd_limit", m.qd_limit);
  r.field("tau_nominal_leg", m.tau_nominal_leg);
  r.field("tau_nominal_arm", m.tau_nominal_arm);
  r.field("tau_abs_factor", m.tau_abs_factor);
  r.field("kp_leg", m.kp_leg);
  r.field("kp_arm", m.kp_arm);
  r.field("kd_leg", m.kd_leg);
  r.field("kd_arm", m.kd_arm);
  r.field("default_joint_pos", m.default_joint_pos);
  r.field("action_scale_leg", m.action_scale_leg);
  r.field("action_scale_arm", m.action_scale_arm);
  r.field("action_clip", m.action_clip);
  r.field("gravity", m.gravity);
  r.field("h_min", m.h_min);
  r.field("h_max", m.h_max);
  r.field("contact_stiffness", m.contact_stiffness);
  r.field("contact_damping", m.contact_damping);
  r.field("friction", m.friction);
  r.field("slip_velocity", m.slip_velocity);
  r.field("foot_filter_tau", m.foot_filter_tau);
  r.field("joint_stop_tolerance", m.joint_stop_tolerance);
  r.finish();
}

inline void read_terrain(const ordered_json& j, const std::string& section,
                         TerrainParams& t) {
  SectionReader r(j, section);
  r.field("amplitudes", t.amplitudes);
  r.field("wavelengths", t.wavelengths);
  r.field("noise_scale", t.noise_scale);
  r.field("max_amplitude", t.max_amplitude);
  r.field("half_length", t.half_length);
  r.field("spacing", t.spacing);
  r.field("flat", t.flat);
  r.finish();
}

inline void read_noise(const ordered_json& j, const std::string& section,
                       NoiseScales& n) {
  SectionReader r(j, section);
  r.field("gravity", n.gravity);
  r.field("lin_vel", n.lin_vel);
  r.field("ang_vel", n.ang_vel);
  r.field("joint_pos", n.joint_pos);
  r.field("joint_vel", n.joint_vel);
  r.field("height_scan", n.height_scan);
  r.finish();
}

inline void read_randomization(const ordered_json& j, const std::string& section,
                               RandomizationConfig& rc) {
  SectionReader r(j, section);
  r.field("mass_fraction", rc.mass_fraction);
  r.field("max_action_delay", rc.max_action_delay);
  r.field("command_x_range", rc.command_x_range);
  r.field("command_z_min", rc.command_z_min);
  r.field("command_z_max", rc.command_z_max);
  r.field("command_angle_range", rc.command_angle_range);
  r.field("regenerate_terrain", rc.regenerate_terrain);
  r.finish();
}

inline std::vector<ConstraintSpec> read_constraints(const ordered_json& j) {
  if (!j.is_array()) throw ConfigError("constraints: expected an array");
  const std::vector<ConstraintSpec> canonical = LunaEnv::default_constraints();
  std::map<std::string, ConstraintSpec> by_name;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string section = "constraints[" + std::to_string(i) + "]";
    SectionReader r(j[i], section);
    ConstraintSpec spec;
    std::string kind = "soft";
    r.field("name", spec.name);
    r.field("kind", kind);
    r.field("limit", spec.limit);
    r.field("p_min", spec.p_min);
    r.field("p_max", spec.p_max);
    r.field("curriculum_end_fraction", spec.curriculum_end_fraction);
    r.finish();
    if (kind == "soft")
      spec.kind = ConstraintKind::kSoft;
    else if (kind == "hard")
      spec.kind = ConstraintKind::kHard;
    else
      throw ConfigError(section + ".kind: expected \"soft\" or \"hard\"");
    if (spec.name.empty())
      throw ConfigError(section + ".name: required");
    if (by_name.count(spec.name))
      throw ConfigError("constraints: duplicate constraint '" + spec.name + "'");
    by_name.emplace(spec.name, std::move(spec));
  }
  // the table must cover exactly the signals the environment produces;
  // report a name the environment does not know before any gap it leaves
  for (const auto& [name, spec] : by_name) {
    const bool known = std::any_of(canonical.begin(), canonical.end(),
                                   [&](const ConstraintSpec& c) { return c.name == name; });
    if (!known)
      throw ConfigError("constraints: unknown constraint '" + name + "'");
  }
  std::vector<ConstraintSpec> ordered;
  for (const auto& c : canonical) {
    auto it = by_name.find(c.name);
    if (it == by_name.end())
      throw ConfigError("constraints: missing constraint '" + c.name + "'");
    ordered.push_back(it->second);
  }
  for (const auto& spec : ordered) {
    try {
      validate(spec);
    } catch (const std::exception& e) {
      throw ConfigError("constraints: " + std::string(e.what()));
    }
  }
  return ordered;
}

}  // namespace detail

inline FullConfig load_config(const ordered_json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const char* section :
       {"environment", "rewards", "constraints", "learner", "output"})
    if (!j.contains(section))
      throw ConfigError(std::string(section) + ": required section missing");
  for (const auto& [k, unused] : j.items())
    if (k != "environment" && k != "rewards" && k != "constraints" &&
        k != "learner" && k != "output")
      throw ConfigError(k + ": unknown section");

  FullConfig cfg;
  {
    detail::SectionReader r(j.at("environment"), "environment");
    r.field("time_limit_s", cfg.time_limit_s);
    if (const auto* o = r.object("robot"))
      detail::read_robot(*o, "environment.robot", cfg.robot);
    if (const auto* o = r.object("terrain"))
      detail::read_terrain(*o, "environment.terrain", cfg.terrain);
    if (const auto* o = r.object("noise"))
      detail::read_noise(*o, "environment.noise", cfg.noise);
    if (const auto* o = r.object("randomization"))
      detail::read_randomization(*o, "environment.randomization",
                                 cfg.randomization);
    r.finish();
    if (cfg.time_limit_s <= 0.0)
      throw ConfigError("environment.time_limit_s: must be positive");
    try {
      cfg.robot.validate();
      cfg.terrain.validate();
    } catch (const std::exception& e) {
      throw ConfigError("environment: " + std::string(e.what()));
    }
  }
  {
    detail::SectionReader r(j.at("rewards"), "rewards");
    r.field("sigma_pos", cfg.rewards.sigma_pos);
    r.field("sigma_rot", cfg.rewards.sigma_rot);
    r.field("reach_radius", cfg.rewards.reach_radius);
    r.field("gate_steepness", cfg.rewards.gate_steepness);
    r.field("base_length", cfg.rewards.base_length);
    r.field("omega_legs", cfg.rewards.omega_legs);
    r.field("omega_arm", cfg.rewards.omega_arm);
    r.field("mu_legs", cfg.rewards.mu_legs);
    r.field("mu_arm", cfg.rewards.mu_arm);
    r.field("weights", cfg.reward_weights);
    r.finish();
    if (cfg.rewards.sigma_pos <= 0.0 || cfg.rewards.sigma_rot <= 0.0)
      throw ConfigError("rewards.sigma_pos: scales must be positive");
    for (const char* key : {"task", "power"})
      if (!cfg.reward_weights.count(key))
        throw ConfigError("rewards.weights." + std::string(key) + ": required");
    if (cfg.reward_weights.size() != 2)
      throw ConfigError("rewards.weights: expected exactly task and power");
  }
  cfg.constraints = detail::read_constraints(j.at("constraints"));
  {
    detail::SectionReader r(j.at("learner"), "learner");
    r.field("gamma", cfg.learner.gamma);
    r.field("gae_lambda", cfg.learner.gae_lambda);
    r.field("clip_epsilon", cfg.learner.clip_epsilon);
    r.field("epochs", cfg.learner.epochs);
    r.field("minibatches", cfg.learner.minibatches);
    r.field("learning_rate", cfg.learner.learning_rate);
    r.field("linear_lr_decay", cfg.learner.linear_lr_decay);
    r.field("entropy_coef", cfg.learner.entropy_coef);
    r.field("value_coef", cfg.learner.value_coef);
    r.field("max_grad_norm", cfg.learner.max_grad_norm);
    r.field("horizon", cfg.learner.horizon);
    r.field("num_envs", cfg.learner.num_envs);
    r.field("iterations", cfg.learner.iterations);
    r.field("seed", cfg.learner.seed);
    r.field("normalize_observations", cfg.learner.normalize_observations);
    r.field("hidden_layers", cfg.hidden_layers);
    r.finish();
    try {
      cfg.learner.validate();
    } catch (const std::exception& e) {
      throw ConfigError("learner: " + std::string(e.what()));
    }
    if (cfg.hidden_layers.empty())
      throw ConfigError("learner.hidden_layers: need at least one layer");
    for (int w : cfg.hidden_layers)
      if (w < 1) throw ConfigError("learner.hidden_layers: widths must be >= 1");
  }
  {
    detail::SectionReader r(j.at("output"), "output");
    r.field("directory", cfg.output.directory);
    r.field("checkpoint_every", cfg.output.checkpoint_every);
    r.field("metrics_file", cfg.output.metrics_file);
    r.finish();
    if (cfg.output.directory.empty())
      throw ConfigError("output.directory: must not be empty");
    if (cfg.output.checkpoint_every < 0)
      throw ConfigError("output.checkpoint_every: must be >= 0");
  }
  return cfg;
}

inline ordered_json dump_config(const FullConfig& cfg) {
  ordered_json j;
  {
    ordered_json env;
    env["time_limit_s"] = cfg.time_limit_s;
    ordered_json robot;
    const RobotModel& m = cfg.robot;
    robot["base_mass"] = m.base_mass;
    robot["base_inertia"] = m.base_inertia;
    robot["hip_spacing"] = m.hip_spacing;
    robot["thigh_length"] = m.thigh_length;
    robot["shank_length"] = m.shank_length;
    robot["arm_link1"] = m.arm_link1;
    robot["arm_link2"] = m.arm_link2;
    robot["arm_mount_x"] = m.arm_mount_x;
    robot["arm_mount_z"] = m.arm_mount_z;
    robot["base_half_x"] = m.base_half_x;
    robot["base_half_z"] = m.base_half_z;
    robot["joint_inertia_leg"] = m.joint_inertia_leg;
    robot["joint_inertia_arm"] = m.joint_inertia_arm;
    robot["q_limit_leg"] = m.q_limit_leg;
    robot["q_limit_arm"] = m.q_limit_arm;
    robot["qd_limit"] = m.qd_limit;
    robot["tau_nominal_leg"] = m.tau_nominal_leg;
    robot["tau_nominal_arm"] = m.tau_nominal_arm;
    robot["tau_abs_factor"] = m.tau_abs_factor;
    robot["kp_leg"] = m.kp_leg;
    robot["kp_arm"] = m.kp_arm;
    robot["kd_leg"] = m.kd_leg;
    robot["kd_arm"] = m.kd_arm;
    robot["default_joint_pos"] = m.default_joint_pos;
    robot["action_scale_leg"] = m.action_scale_leg;
    robot["action_scale_arm"] = m.action_scale_arm;
    robot["action_clip"] = m.action_clip;
    robot["gravity"] = m.gravity;
    robot["h_min"] = m.h_min;
    robot["h_max"] = m.h_max;
    robot["contact_stiffness"] = m.contact_stiffness;
    robot["contact_damping"] = m.contact_damping;
    robot["friction"] = m.friction;
    robot["slip_velocity"] = m.slip_velocity;
    robot["foot_filter_tau"] = m.foot_filter_tau;
    robot["joint_stop_tolerance"] = m.joint_stop_tolerance;
    env["robot"] = std::move(robot);
    ordered_json terr;
    terr["amplitudes"] = cfg.terrain.amplitudes;
    terr["wavelengths"] = cfg.terrain.wavelengths;
    terr["noise_scale"] = cfg.terrain.noise_scale;
    terr["max_amplitude"] = cfg.terrain.max_amplitude;
    terr["half_length"] = cfg.terrain.half_length;
    terr["spacing"] = cfg.terrain.spacing;
    terr["flat"] = cfg.terrain.flat;
    env["terrain"] = std::move(terr);
    ordered_json noise;
    noise["gravity"] = cfg.noise.gravity;
    noise["lin_vel"] = cfg.noise.lin_vel;
    noise["ang_vel"] = cfg.noise.ang_vel;
    noise["joint_pos"] = cfg.noise.joint_pos;
    noise["joint_vel"] = cfg.noise.joint_vel;
    noise["height_scan"] = cfg.noise.height_scan;
    env["noise"] = std::move(noise);
    ordered_json rnd;
    rnd["mass_fraction"] = cfg.randomization.mass_fraction;
    rnd["max_action_delay"] = cfg.randomization.max_action_delay;
    rnd["command_x_range"] = cfg.randomization.command_x_range;
    rnd["command_z_min"] = cfg.randomization.command_z_min;
    rnd["command_z_max"] = cfg.randomization.command_z_max;
    rnd["command_angle_range"] = cfg.randomization.command_angle_range;
    rnd["regenerate_terrain"] = cfg.randomization.regenerate_terrain;
    env["randomization"] = std::move(rnd);
    j["environment"] = std::move(env);
  }
  {
    ordered_json rew;
    rew["sigma_pos"] = cfg.rewards.sigma_pos;
    rew["sigma_rot"] = cfg.rewards.sigma_rot;
    rew["reach_radius"] = cfg.rewards.reach_radius;
    rew["gate_steepness"] = cfg.rewards.gate_steepness;
    rew["base_length"] = cfg.rewards.base_length;
    rew["omega_legs"] = cfg.rewards.omega_legs;
    rew["omega_arm"] = cfg.rewards.omega_arm;
    rew["mu_legs"] = cfg.rewards.mu_legs;
    rew["mu_arm"] = cfg.rewards.mu_arm;
    rew["weights"] = cfg.reward_weights;
    j["rewards"] = std::move(rew);
  }
  {
    ordered_json arr = ordered_json::array();
    for (const ConstraintSpec& c : cfg.constraints) {
      ordered_json row;
      row["name"] = c.name;
      row["kind"] = c.kind == ConstraintKind::kHard ? "hard" : "soft";
      row["limit"] = c.limit;
      row["p_min"] = c.p_min;
      row["p_max"] = c.p_max;
      row["curriculum_end_fraction"] = c.curriculum_end_fraction;
      arr.push_back(std::move(row));
    }
    j["constraints"] = std::move(arr);
  }
  {
    ordered_json lrn;
    lrn["gamma"] = cfg.learner.gamma;
    lrn["gae_lambda"] = cfg.learner.gae_lambda;
    lrn["clip_epsilon"] = cfg.learner.clip_epsilon;
    lrn["epochs"] = cfg.learner.epochs;
    lrn["minibatches"] = cfg.learner.minibatches;
    lrn["learning_rate"] = cfg.learner.learning_rate;
    lrn["linear_lr_decay"] = cfg.learner.linear_lr_decay;
    lrn["entropy_coef"] = cfg.learner.entropy_coef;
    lrn["value_coef"] = cfg.learner.value_coef;
    lrn["max_grad_norm"] = cfg.learner.max_grad_norm;
    lrn["horizon"] = cfg.learner.horizon;
    lrn["num_envs"] = cfg.learner.num_envs;
    lrn["iterations"] = cfg.learner.iterations;
    lrn["seed"] = cfg.learner.seed;
    lrn["normalize_observations"] = cfg.learner.normalize_observations;
    lrn["hidden_layers"] = cfg.hidden_layers;
    j["learner"] = std::move(lrn);
  }
  {
    ordered_json out;
    out["directory"] = cfg.output.directory;
    out["checkpoint_every"] = cfg.output.checkpoint_every;
    out["metrics_file"] = cfg.output.metrics_file;
    j["output"] = std::move(out);
  }
  return j;
}

// Builds the simulator this config describes; `seed` must already be the
// env-specific stream seed.
inline LunaEnv make_env(const FullConfig& cfg, std::uint64_t seed) {
  return LunaEnv(cfg.robot, cfg.terrain, cfg.rewards, cfg.reward_weights,
                 cfg.noise, cfg.randomization, cfg.time_limit_s, seed);
}

inline ConstraintEngine make_engine(const FullConfig& cfg) {
  ConstraintEngine engine;
  for (const ConstraintSpec& c : cfg.constraints) engine.add(c);
  return engine;
}

inline NetworkShape make_shape(const FullConfig& cfg) {
  return NetworkShape{LunaEnv::kObsDim, cfg.hidden_layers, kNumJoints};
}

}  // namespace catrl
