#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace stcal::optimize {

// One row of the schedule. Fields left out in JSON inherit from the previous stage.
struct Stage {
  int iterations = 0;
  double lr = 0.1;
  int max_len = 4;   // longest syndrome sequence included (L_S)
  int exponent = 2;  // L_GSC exponent
  int kb = 1;        // mini-batch size for gradient mixing
  double gamma = 0.0;
  double delta = 0.0;
};

// Units of the optimization variables: "normalized" steps in the surrogate's scaled voltage
// channel, "mv" steps in millivolts.
enum class StepUnits { Normalized, Millivolt };

struct OptimizeConfig {
  int n_gatesets = 256;
  int gate_segments = 12;  // free segments per gate; hold segments are added from the qubit config
  std::vector<Stage> stages;
  std::uint64_t seed = 0;
  int top_k = 10;
  int n_noise = 60;
  StepUnits units = StepUnits::Normalized;
  int history_stride = 10;  // iterations between rows in the history CSV

  int total_iterations() const;
  // Throws ConfigError: K % kb == 0 per stage, exponent in {2, 4}, 0 <= delta <= 1, gamma >= 0.
  void validate() const;
};

OptimizeConfig optimize_config_from_json(const nlohmann::json& j);
// Resolved form: every stage written out in full.
nlohmann::json to_json(const OptimizeConfig& c);
OptimizeConfig load_optimize_config(const std::string& path);

}  // namespace stcal::optimize
