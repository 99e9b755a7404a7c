#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stcal/cli/commands.hpp"
#include "stcal/cli/options.hpp"
#include "stcal/common/errors.hpp"
#include "stcal/common/hash.hpp"
#include "stcal/probe/dataset.hpp"

using namespace stcal;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "stcal");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

nlohmann::json read(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("stcal_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  int gen(const std::string& out, int count, int seed) {
    return run({"gen-data", "--config", "general", "--count", std::to_string(count), "--seed", std::to_string(seed),
                "--out", path(out), "--workers", "2", "--set", "noise.enabled=false", "--set",
                "probe.length_range=[10,20]"});
  }
  int train(const std::string& data, const std::string& out, int seed) {
    return run({"train", "--config", "train_desk", "--data", path(data), "--seed", std::to_string(seed), "--out",
                path(out), "--set", "l_max=48", "--set", "train.max_epochs=300", "--set", "train.early_stop=6",
                "--set", "train.plateau_patience=3", "--set", "train.batch_size=128"});
  }
  int optimize(const std::string& ckpt, const std::string& out, int seed) {
    return run({"optimize", "--config", "optimize_desk", "--checkpoint", path(ckpt), "--seed", std::to_string(seed),
                "--out", path(out), "--set", "n_gatesets=2", "--set", "top_k=2", "--set", "iteration_scale=0.003",
                "--set", "stages.2.kb=2", "--set", "n_noise=4"});
  }

  fs::path dir;
};

}  // namespace

TEST(CliOptions, OverridesAndLists) {
  nlohmann::json j = {{"a", {{"b", 1}}}, {"s", {{{"x", 1}}, {{"x", 2}}}}};
  cli::apply_overrides(j, {"a.b=2.5", "a.c.d=true", "name=hello", "s.1.x=7", "arr=[1,2]"});
  EXPECT_EQ(j["a"]["b"], 2.5);
  EXPECT_EQ(j["a"]["c"]["d"], true);
  EXPECT_EQ(j["name"], "hello");
  EXPECT_EQ(j["s"][1]["x"], 7);
  EXPECT_EQ(j["arr"], nlohmann::json::array({1, 2}));
  EXPECT_THROW(cli::apply_overrides(j, {"novalue"}), ConfigError);
  EXPECT_THROW(cli::apply_overrides(j, {"s.5.x=1"}), ConfigError);
  EXPECT_EQ(cli::parse_int_list("10,20,48"), (std::vector<int>{10, 20, 48}));
  EXPECT_THROW(cli::parse_int_list("10,x"), ConfigError);
  EXPECT_THROW(cli::resolve_config("no_such_config"), ConfigError);
  EXPECT_TRUE(fs::exists(cli::resolve_config("general")));
}

TEST_F(CliTest, GenDataIsReproducibleAndInRange) {
  ASSERT_EQ(gen("a.jsonl", 100, 3), 0);
  ASSERT_EQ(gen("b.jsonl", 100, 3), 0);
  EXPECT_EQ(sha256_file(path("a.jsonl")), sha256_file(path("b.jsonl")));
  ASSERT_EQ(gen("c.jsonl", 100, 4), 0);
  EXPECT_NE(sha256_file(path("a.jsonl")), sha256_file(path("c.jsonl")));
  const auto recs = probe::read_dataset(path("a.jsonl"));
  ASSERT_EQ(recs.size(), 100u);
  for (const auto& r : recs) {
    EXPECT_GE(r.pulse.length(), 10u);
    EXPECT_LE(r.pulse.length(), 20u);
    for (double e : r.pulse.epsilons) {
      EXPECT_GE(e, -3.2);
      EXPECT_LE(e, 1.27);
    }
  }
  const auto m = read(path("a.jsonl") + ".manifest.json");
  EXPECT_EQ(m["command"], "gen-data");
  EXPECT_EQ(m["seed"], 3);
  EXPECT_EQ(m["artifacts"][0]["sha256"], sha256_file(path("a.jsonl")));
  EXPECT_TRUE(m["config_hashes"].contains("qubit"));
}

TEST_F(CliTest, ConfigErrorsExitWithTwo) {
  EXPECT_EQ(run({"gen-data", "--config", "missing_config", "--count", "5", "--out", path("x.jsonl")}), 2);
  EXPECT_EQ(run({"gen-data", "--config", "general", "--count", "5", "--out", path("x.jsonl"), "--set",
                 "voltage_range_mv=[1,0]"}),
            2);
  EXPECT_EQ(run({"gen-data", "--config", "general", "--count", "0", "--out", path("x.jsonl")}), 2);
  EXPECT_EQ(run({"gen-data", "--count", "5"}), 2);
  EXPECT_EQ(run({"bogus"}), 2);
}

TEST_F(CliTest, TrainOptimizeEvalPipeline) {
  ASSERT_EQ(gen("d.jsonl", 1000, 5), 0);
  ASSERT_EQ(train("d.jsonl", "m1/model.json", 6), 0);
  ASSERT_EQ(train("d.jsonl", "m2/model.json", 6), 0);

  // Early stop ends the run well before max_epochs; one history row per epoch.
  const auto ckpt = read(path("m1/model.json"));
  const int epochs = ckpt["training"]["epochs_run"];
  EXPECT_LT(epochs, 300);
  EXPECT_EQ(count_lines(path("m1/model.history.csv")), static_cast<std::size_t>(epochs) + 1);
  EXPECT_EQ(ckpt["training"]["manifest"], "model.manifest.json");
  for (const char* f : {"model.json", "model.history.csv", "model.metrics.json"}) {
    EXPECT_EQ(sha256_file(dir / "m1" / f), sha256_file(dir / "m2" / f)) << f;
  }

  ASSERT_EQ(optimize("m1/model.json", "o1", 7), 0);
  ASSERT_EQ(optimize("m1/model.json", "o2", 7), 0);
  for (const char* f : {"candidates.csv", "history.csv", "initial_vs_final.csv", "sorted_infidelities.csv", "top_k.csv",
                        "histogram.csv", "summary.json", "pulses/candidate_000.json", "pulses/candidate_001.json"}) {
    ASSERT_TRUE(fs::exists(dir / "o1" / f)) << f;
    EXPECT_EQ(sha256_file(dir / "o1" / f), sha256_file(dir / "o2" / f)) << f;
  }
  EXPECT_EQ(count_lines(dir / "o1" / "candidates.csv"), 3u);
  const auto summary = read(dir / "o1" / "summary.json");
  const auto top = summary["top_k"].get<std::vector<int>>();
  ASSERT_EQ(top.size(), 2u);
  const auto c0 = read(dir / "o1" / "pulses" / "candidate_000.json");
  const auto c1 = read(dir / "o1" / "pulses" / "candidate_001.json");
  const double l0 = c0["final_loss"], l1 = c1["final_loss"];
  EXPECT_EQ(top[0], l0 <= l1 ? 0 : 1);
  EXPECT_EQ(c0["gates"].size(), 2u);
  EXPECT_EQ(c0["gates"][0]["epsilons_mv"].size(), 12u);

  ASSERT_EQ(run({"eval", "--checkpoint", path("m1/model.json"), "--out", path("e"), "--lengths", "10,20,30",
                 "--count", "40", "--seed", "2"}),
            0);
  const auto metrics = read(dir / "e" / "metrics.json");
  for (const char* k : {"mae", "mse", "rmse", "A_0.05", "A_0.01"}) EXPECT_TRUE(metrics.contains(k)) << k;
  EXPECT_LE(metrics["A_0.01"].get<double>(), metrics["A_0.05"].get<double>());
  EXPECT_EQ(count_lines(dir / "e" / "length_generalization.csv"), 4u);
  EXPECT_EQ(run({"eval", "--checkpoint", path("m1/model.json"), "--out", path("e2"), "--lengths", "10,49"}), 2);
}
