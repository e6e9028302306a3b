#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "catrl/checkpoint.hpp"
#include "catrl/config.hpp"

using namespace catrl;
using Catch::Matchers::ContainsSubstring;

namespace {

ordered_json minimal_config() {
  ordered_json j;
  j["environment"] = ordered_json::object();
  j["rewards"]["weights"] = {{"task", 1.0}, {"power", 1.0}};
  j["constraints"] = ordered_json::array();
  for (const ConstraintSpec& c : LunaEnv::default_constraints()) {
    ordered_json row;
    row["name"] = c.name;
    row["kind"] = c.kind == ConstraintKind::kHard ? "hard" : "soft";
    row["limit"] = c.limit;
    row["p_min"] = c.p_min;
    row["p_max"] = c.p_max;
    row["curriculum_end_fraction"] = c.curriculum_end_fraction;
    j["constraints"].push_back(row);
  }
  j["learner"] = ordered_json::object();
  j["output"] = ordered_json::object();
  return j;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("minimal config loads with library defaults", "[config]") {
  const FullConfig cfg = load_config(minimal_config());
  CHECK(cfg.time_limit_s == 10.0);
  CHECK(cfg.learner.num_envs == 256);
  CHECK(cfg.learner.gamma == 0.99);
  CHECK(cfg.rewards.sigma_pos == 0.25);
  CHECK(cfg.hidden_layers == std::vector<int>{128, 64, 32});
  CHECK(cfg.constraints.size() == LunaEnv::kNumConstraints);
  CHECK(cfg.output.directory == "runs/default");
}

TEST_CASE("dump then load is the identity on configs", "[config]") {
  FullConfig cfg = load_config(minimal_config());
  cfg.rewards.sigma_pos = 0.05;
  cfg.rewards.reach_radius = 0.4;
  cfg.learner.num_envs = 12;
  cfg.learner.seed = 31337;
  cfg.hidden_layers = {16, 8};
  cfg.terrain.amplitudes = {0.04, 0.02};
  cfg.robot.base_mass = 13.5;
  cfg.constraints[0].p_max = 0.77;
  cfg.output.directory = "runs/x";

  const ordered_json dumped = dump_config(cfg);
  const FullConfig reloaded = load_config(dumped);
  const ordered_json dumped_again = dump_config(reloaded);
  CHECK(dumped == dumped_again);
  CHECK(reloaded.rewards.sigma_pos == 0.05);
  CHECK(reloaded.learner.seed == 31337);
  CHECK(reloaded.constraints[0].p_max == 0.77);
  CHECK(reloaded.robot.base_mass == 13.5);
}

TEST_CASE("config diagnostics name the offending section and field",
          "[config]") {
  ordered_json j = minimal_config();
  j.erase("learner");
  CHECK_THROWS_WITH(load_config(j), ContainsSubstring("learner"));

  j = minimal_config();
  j["surprise"] = 1;
  CHECK_THROWS_WITH(load_config(j), ContainsSubstring("surprise: unknown section"));

  j = minimal_config();
  j["learner"]["warmup"] = 10;
  CHECK_THROWS_WITH(load_config(j), ContainsSubstring("learner.warmup: unknown field"));

  j = minimal_config();
  j["learner"]["gamma"] = "fast";
  CHECK_THROWS_WITH(load_config(j), ContainsSubstring("learner.gamma"));

  j = minimal_config();
  j["environment"]["time_limit_s"] = -1.0;
  CHECK_THROWS_WITH(load_config(j),
                    ContainsSubstring("environment.time_limit_s"));

  j = minimal_config();
  j["environment"]["robot"]["base_mass"] = -2.0;
  CHECK_THROWS_WITH(load_config(j), ContainsSubstring("environment"));

  j = minimal_config();
  j["rewards"]["weights"] = {{"task", 1.0}};
  CHECK_THROWS_WITH(load_config(j), ContainsSubstring("rewards.weights"));
}

TEST_CASE("constraint table errors pinpoint the row", "[config]") {
  // missing one canonical row
  ordered_json j = minimal_config();
  j["constraints"].erase(3);
  CHECK_THROWS_WITH(load_config(j), ContainsSubstring("c_v"));

  // duplicated row
  j = minimal_config();
  j["constraints"].push_back(j["constraints"][0]);
  CHECK_THROWS_WITH(load_config(j), ContainsSubstring("duplicate"));

  // a name outside the canonical set
  j = minimal_config();
  j["constraints"][0]["name"] = "c_mystery";
  CHECK_THROWS_WITH(load_config(j), ContainsSubstring("c_mystery"));

  // hard rows may not carry partial probabilities
  j = minimal_config();
  for (auto& row : j["constraints"])
    if (row["name"] == "c_fall") row["p_min"] = 0.5;
  CHECK_THROWS(load_config(j));
}

TEST_CASE("constraint rows are reordered into canonical order", "[config]") {
  ordered_json j = minimal_config();
  std::reverse(j["constraints"].begin(), j["constraints"].end());
  const FullConfig cfg = load_config(j);
  const auto& names = LunaEnv::constraint_names();
  for (std::size_t i = 0; i < cfg.constraints.size(); ++i)
    CHECK(cfg.constraints[i].name == names[i]);
}

TEST_CASE("factories wire the config into engine, env, and net shape",
          "[config]") {
  FullConfig cfg = load_config(minimal_config());
  cfg.hidden_layers = {8, 4};
  const ConstraintEngine engine = make_engine(cfg);
  CHECK(engine.size() == LunaEnv::kNumConstraints);
  const NetworkShape shape = make_shape(cfg);
  CHECK(shape.input_dim == LunaEnv::kObsDim);
  CHECK(shape.action_dim == kNumJoints);
  CHECK(shape.hidden == std::vector<int>{8, 4});
  LunaEnv env = make_env(cfg, 123);
  CHECK(env.observation_dim() == LunaEnv::kObsDim);
}

TEST_CASE("checkpoint round-trip restores every stored quantity exactly",
          "[checkpoint]") {
  const NetworkShape shape{7, {16, 8}, 3};
  ActorCritic net(shape, 99);
  // give the optimizer state a non-trivial pattern
  for (int i = 0; i < net.parameter_count(); ++i) {
    net.adam_m()[i] = 0.01 * i;
    net.adam_v()[i] = 0.5 + 0.001 * i;
  }
  net.adam_step() = 41;
  ObservationNormalizer norm(7, true);
  Eigen::MatrixXd batch(20, 7);
  batch.setRandom();
  norm.update(batch);

  const auto path = temp_file("catrl_ckpt_roundtrip.ckpt");
  save_checkpoint(path.string(), net, norm, 0.375);
  const CheckpointData data = load_checkpoint(path.string());
  std::filesystem::remove(path);

  CHECK(data.shape.input_dim == 7);
  CHECK(data.shape.hidden == std::vector<int>{16, 8});
  CHECK(data.shape.action_dim == 3);
  CHECK(data.progress == 0.375);
  CHECK(data.adam_step == 41);
  CHECK(data.obs_norm_enabled);

  ActorCritic restored = data.build_net();
  CHECK((restored.params() - net.params()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((restored.adam_m() - net.adam_m()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((restored.adam_v() - net.adam_v()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(restored.adam_step() == 41);

  ObservationNormalizer rn = data.build_normalizer();
  CHECK(rn.count() == norm.count());
  CHECK((rn.mean() - norm.mean()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((rn.variance() - norm.variance()).cwiseAbs().maxCoeff() == 0.0);

  // normalization behaves identically after the round trip
  Eigen::VectorXd probe(7);
  probe.setRandom();
  CHECK((rn.normalize(probe) - norm.normalize(probe)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("checkpoint loader rejects foreign and damaged files",
          "[checkpoint]") {
  const auto path = temp_file("catrl_ckpt_bad.ckpt");

  {
    std::ofstream os(path, std::ios::binary);
    os << "PNG\x89 definitely not a checkpoint";
  }
  CHECK_THROWS_WITH(load_checkpoint(path.string()), ContainsSubstring("magic"));

  // truncation in the middle of the parameter array
  ActorCritic net(NetworkShape{4, {8}, 2}, 1);
  ObservationNormalizer norm(4, false);
  save_checkpoint(path.string(), net, norm, 0.0);
  const auto full_size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full_size / 2);
  CHECK_THROWS_AS(load_checkpoint(path.string()), CheckpointError);

  std::filesystem::remove(path);
  CHECK_THROWS_WITH(load_checkpoint(path.string()),
                    ContainsSubstring("cannot open"));
}

TEST_CASE("missing checkpoint fields are reported by name", "[checkpoint]") {
  const auto path = temp_file("catrl_ckpt_short.ckpt");
  {
    std::ofstream os(path, std::ios::binary);
    os.write("CATC", 4);  // magic only, then EOF
  }
  CHECK_THROWS_WITH(load_checkpoint(path.string()), ContainsSubstring("version"));
  std::filesystem::remove(path);
}
