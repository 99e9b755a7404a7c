#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stcal::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::filesystem::path out;
  int workers = 0;  // 0: hardware concurrency
  std::vector<std::string> sets;
  std::vector<std::string> argv;  // recorded in the manifest
};

struct GenDataOptions {
  Common common;
  std::size_t count = 0;
};

struct TrainOptions {
  Common common;
  std::filesystem::path data;
};

struct OptimizeOptions {
  Common common;
  std::filesystem::path checkpoint;
  std::string qubit;  // qubit config; default from the checkpoint's training block
};

struct EvalOptions {
  Common common;
  std::filesystem::path checkpoint;
  std::vector<int> lengths;
  std::size_t count = 1000;
  std::optional<std::filesystem::path> data;
};

// Each writes its artifacts plus a manifest and throws stcal errors on failure.
// gen-data: out is the JSONL path; sidecar <out>.manifest.json.
void cmd_gen_data(const GenDataOptions& o);
// train: out is the checkpoint path; also <stem>.history.csv, <stem>.metrics.json and
// <stem>.manifest.json next to it.
void cmd_train(const TrainOptions& o);
// optimize / eval: out is a directory.
void cmd_optimize(const OptimizeOptions& o);
void cmd_eval(const EvalOptions& o);

// Parses argv, runs the subcommand and maps errors to exit codes.
int run(int argc, char** argv);

}  // namespace stcal::cli
