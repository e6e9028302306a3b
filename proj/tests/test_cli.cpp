#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "catrl/config.hpp"

using namespace catrl;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

// runs the installed binary with stdout+stderr captured
RunResult run_cli(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "catrl_cli_test_out.txt";
  const std::string cmd =
      std::string(CATRL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream is(log);
  std::stringstream ss;
  ss << is.rdbuf();
  r.output = ss.str();
  fs::remove(log);
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// a deliberately tiny training setup so the subprocess finishes in seconds
fs::path write_tiny_config(const fs::path& dir, std::uint64_t seed) {
  FullConfig cfg;
  cfg.time_limit_s = 1.0;
  cfg.terrain.flat = true;
  cfg.learner.num_envs = 4;
  cfg.learner.horizon = 8;
  cfg.learner.iterations = 3;
  cfg.learner.epochs = 2;
  cfg.learner.minibatches = 2;
  cfg.learner.seed = seed;
  cfg.hidden_layers = {8, 8};
  cfg.output.checkpoint_every = 2;
  cfg.output.directory = (dir / "run").string();
  fs::create_directories(dir);
  const fs::path path = dir / "tiny.json";
  std::ofstream os(path);
  os << dump_config(cfg).dump(2) << "\n";
  return path;
}

}  // namespace

TEST_CASE("cli rejects missing and unknown subcommands", "[cli]") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("cli usage errors name the problem", "[cli]") {
  const RunResult r = run_cli("eval /nonexistent/checkpoint.ckpt");
  CHECK(r.exit_code == 2);
  CHECK_FALSE(r.output.empty());
  CHECK(run_cli("export /nonexistent/run_dir").exit_code == 2);
  CHECK(run_cli("export . --format yaml").exit_code == 2);
  CHECK(run_cli("train /nonexistent/config.json").exit_code == 2);
}

TEST_CASE("gradcheck subcommand passes and reports per-case errors", "[cli]") {
  const RunResult r = run_cli("gradcheck --seed 5");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("PASS") != std::string::npos);
  CHECK(r.output.find("case") != std::string::npos);
}

TEST_CASE("train, eval, and export cooperate end to end", "[cli]") {
  const fs::path base = fs::temp_directory_path() / "catrl_cli_e2e";
  fs::remove_all(base);
  const fs::path config = write_tiny_config(base, 100);
  const fs::path run_dir = base / "run";

  const RunResult train = run_cli("train " + config.string());
  INFO(train.output);
  REQUIRE(train.exit_code == 0);
  CHECK(fs::exists(run_dir / "config.json"));
  CHECK(fs::exists(run_dir / "metrics.csv"));
  CHECK(fs::exists(run_dir / "checkpoint_000002.ckpt"));  // periodic
  REQUIRE(fs::exists(run_dir / "checkpoint_final.ckpt"));

  const std::string metrics = read_file(run_dir / "metrics.csv");
  CHECK(metrics.rfind("iteration,mean_reward", 0) == 0);
  // header plus one row per iteration
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 4);

  // eval picks up config.json sitting next to the checkpoint
  const RunResult eval = run_cli(
      "eval " + (run_dir / "checkpoint_final.ckpt").string() +
      " --episodes 2 --seed 1");
  INFO(eval.output);
  REQUIRE(eval.exit_code == 0);
  CHECK(fs::exists(run_dir / "eval_errors.csv"));
  CHECK(fs::exists(run_dir / "eval_summary.txt"));
  CHECK(eval.output.find("pos_error") != std::string::npos);
  CHECK(eval.output.find("hard violations") != std::string::npos);

  const RunResult exported = run_cli("export " + run_dir.string());
  INFO(exported.output);
  REQUIRE(exported.exit_code == 0);
  CHECK(fs::exists(run_dir / "pos_error_hist.csv"));
  CHECK(fs::exists(run_dir / "rot_error_hist.csv"));
  CHECK(fs::exists(run_dir / "summary.txt"));

  fs::remove_all(base);
}

TEST_CASE("identical config and seed reproduce the metrics byte for byte",
          "[cli]") {
  const fs::path base = fs::temp_directory_path() / "catrl_cli_repro";
  fs::remove_all(base);
  const fs::path config = write_tiny_config(base, 2024);

  const RunResult first =
      run_cli("train " + config.string() + " --out " + (base / "a").string());
  INFO(first.output);
  REQUIRE(first.exit_code == 0);
  const RunResult second =
      run_cli("train " + config.string() + " --out " + (base / "b").string());
  REQUIRE(second.exit_code == 0);

  const std::string ma = read_file(base / "a" / "metrics.csv");
  const std::string mb = read_file(base / "b" / "metrics.csv");
  CHECK(ma == mb);
  CHECK_FALSE(ma.empty());

  // different seed must change the numbers
  const fs::path other = write_tiny_config(base / "other", 2025);
  const RunResult third =
      run_cli("train " + other.string() + " --out " + (base / "c").string());
  REQUIRE(third.exit_code == 0);
  CHECK(read_file(base / "c" / "metrics.csv") != ma);

  fs::remove_all(base);
}
