#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "stcal/probe/sampling.hpp"
#include "stcal/qsim/simulator.hpp"

namespace stcal::probe {

struct ProbeRecord {
  qsim::ControlPulse pulse;
  qsim::MeasurementStats stats;
  StrategyKind strategy = StrategyKind::UniformRandom;
  std::uint64_t seed = 0;  // substream seed that reproduces this record
};

// Record i is drawn from the substream derived from (master_seed, i), so the output does
// not depend on the worker count.
std::vector<ProbeRecord> generate_dataset(const SamplingStrategy& strategy, const qsim::QubitConfig& cfg,
                                          std::size_t count, std::uint64_t master_seed, int workers = 1);

// One record from its substream seed.
ProbeRecord generate_record(const SamplingStrategy& strategy, const qsim::QubitConfig& cfg, std::uint64_t seed);

nlohmann::json to_json(const ProbeRecord& r);
ProbeRecord record_from_json(const nlohmann::json& j);

// Newline-delimited JSON, one record per line.
void write_dataset(const std::filesystem::path& path, std::span<const ProbeRecord> records);
std::vector<ProbeRecord> read_dataset(const std::filesystem::path& path);

struct SplitRatios {
  double train = 0.81;
  double validation = 0.09;
  double test = 0.10;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Shuffled disjoint split of 0..n-1. Needs n >= 3; every part is non-empty.
DatasetSplit split_dataset(std::size_t n, const SplitRatios& ratios, std::uint64_t seed);

// Width of the p_mean bins used for density weighting.
inline constexpr double kWeightBinWidth = 0.01;

// weight = (count of the fullest bin) / (count of the record's bin), so every weight >= 1.
std::vector<double> sample_weights(std::span<const double> p_means);
std::vector<double> sample_weights(std::span<const ProbeRecord> records);

}  // namespace stcal::probe
