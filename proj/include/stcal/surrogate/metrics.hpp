#pragma once

#include <array>
#include <span>
#include <vector>

#include <json.hpp>

#include "stcal/probe/dataset.hpp"
#include "stcal/surrogate/network.hpp"

namespace stcal::surrogate {

// Index 0 is p_mean, index 1 is p_stderr.
struct Metrics {
  std::size_t count = 0;
  std::array<double, 2> mae{};
  std::array<double, 2> mse{};
  std::array<double, 2> rmse{};
  double mae_avg = 0.0;
  double mse_avg = 0.0;
  double rmse_avg = 0.0;
  // Fraction of records whose p_mean error is <= d.
  double a005 = 0.0;
  double a001 = 0.0;
};

nlohmann::json to_json(const Metrics& m);

// predictions/targets: (2, N). Throws DomainError on N = 0.
Metrics compute_metrics(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);
Metrics evaluate(const Model& model, std::span<const probe::ProbeRecord> records);

struct LengthRow {
  int length = 0;
  std::size_t count = 0;
  std::array<double, 2> mae{};
  std::array<double, 2> rmse{};
  bool in_window = false;
};

// Fresh probe records at each fixed length, scored against the model. The training window
// [window_min, window_max] only sets the in_window flag.
std::vector<LengthRow> length_generalization_report(const Model& model, const qsim::QubitConfig& cfg,
                                                    const probe::SamplingStrategy& strategy,
                                                    std::span<const int> lengths, std::size_t count,
                                                    std::uint64_t seed, int window_min, int window_max,
                                                    int workers = 1);

}  // namespace stcal::surrogate
