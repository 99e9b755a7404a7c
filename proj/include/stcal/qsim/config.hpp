#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "stcal/qsim/exchange.hpp"
#include "stcal/qsim/noise.hpp"
#include "stcal/qsim/transfer.hpp"

namespace stcal::qsim {

// Settling protocol for transient-heavy devices: every gate pulse ends with per_gate
// segments at eps_hold, and final segments at eps_hold close each measured sequence.
struct HoldSpec {
  double eps_hold = 0.0;  // mV
  int per_gate = 0;
  int final = 0;
};

// Everything the ground-truth simulator needs.
struct QubitConfig {
  std::string name;
  ExchangeModel exchange;
  TransferKernel kernel;
  NoiseConfig noise;
  double eps_min = -1.0;  // mV
  double eps_max = 1.0;   // mV
  // Field gradient assumed by the experimenter; written into every pulse.
  double nominal_dbz = 0.0;  // rad/ns
  std::optional<HoldSpec> hold;

  void validate() const;
};

// JSON schema (frequencies as f in MHz, angular = 2 pi f):
// {
//   "name": "general",
//   "exchange": {"model": "general", "j0_mhz": 159.0, "eps0_mv": 0.69},
//   "kernel": {"type": "gaussian", "sigma_ns": 1.0},
//   "noise": {"enabled": true, "sigma_eps_mv": 8e-3, "dbz_mean_mhz": 42.1, "sigma_dbz_mhz": 2.8,
//             "n_samples": 60, "fast": {"s0_v2_per_hz": 1.024e-15, ...}},
//   "voltage_range_mv": [-3.2, 1.27],
//   "nominal_dbz_mhz": 42.1,
//   "hold": {"eps_mv": -3.18, "per_gate": 4, "final": 6}      (optional)
// }
// Unknown top-level keys (e.g. "probe") are ignored here.
ExchangeModel exchange_from_json(const nlohmann::json& j);
nlohmann::json exchange_to_json(const ExchangeModel& m);

QubitConfig qubit_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QubitConfig& cfg);

QubitConfig load_qubit_config(const std::string& path);

}  // namespace stcal::qsim
