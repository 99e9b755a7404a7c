#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stcal/probe/dataset.hpp"
#include "stcal/surrogate/network.hpp"

namespace stcal::surrogate {

struct TrainConfig {
  // Adam
  double lr0 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Plateau schedule, counted in epochs without validation improvement.
  double plateau_factor = 0.8;
  int plateau_patience = 60;
  int early_stop = 130;
  int batch_size = 256;
  int max_epochs = 100000;
  double bn_momentum = 0.99;
  bool weighted = true;  // density weights on the training loss
  bool double_precision = false;
  std::uint64_t seed = 0;

  static TrainConfig general();
  static TrainConfig specific();

  // Throws ConfigError.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
// Missing keys keep the values of `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base = {});

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;       // weighted MAE over the epoch's mini-batches
  double validation_loss = 0.0;  // unweighted MAE, inference mode
  double lr = 0.0;
};

struct TrainResult {
  Model model;  // parameters of the best validation epoch
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_validation_loss = 0.0;
  bool diverged = false;
};

// Called after every epoch; return false to stop early.
using EpochCallback = std::function<bool(const EpochRecord&)>;

// Mini-batch Adam on the weighted MAE. `weights` aligns with `train_set` (empty = all 1).
TrainResult train(const Model& init, std::span<const probe::ProbeRecord> train_set, std::span<const double> weights,
                  std::span<const probe::ProbeRecord> validation_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

// Unweighted MAE over both outputs of a record set, inference mode.
double validation_mae(const Model& model, std::span<const probe::ProbeRecord> records);

}  // namespace stcal::surrogate
