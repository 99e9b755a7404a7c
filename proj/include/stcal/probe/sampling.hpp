#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "stcal/common/rng.hpp"
#include "stcal/qsim/config.hpp"
#include "stcal/qsim/exchange.hpp"
#include "stcal/qsim/pulse.hpp"
#include "stcal/qsim/units.hpp"

namespace stcal::probe {

enum class StrategyKind { UniformRandom, RotationWindow, UniformAngle };

std::string to_string(StrategyKind kind);
StrategyKind strategy_from_string(const std::string& s);

// Mixture of probe-pulse generators. The two model-based branches build the pulse from
// constant-voltage stretches whose voltage is chosen through the assumed (exponential)
// exchange model.
struct SamplingStrategy {
  double frac_uniform = 0.60;
  double frac_window = 0.10;
  double frac_angle = 0.30;
  int length_min = 10;
  int length_max = 50;
  double eps_min = -1.0;
  double eps_max = 1.0;
  qsim::GeneralExchange assumed;
  double dbz = 0.0;  // nominal gradient written into pulses, rad/ns
  // Accumulated rotation J*T targeted by rotation-window stretches, rad.
  double window_min = qsim::kPi / 2;
  double window_max = 4 * qsim::kPi;
  int max_retries = 32;

  void validate() const;
};

// Builds the strategy from a config's "probe" block and its voltage range / nominal dBz.
SamplingStrategy strategy_from_config(const nlohmann::json& probe_block, const qsim::QubitConfig& cfg);
nlohmann::json to_json(const SamplingStrategy& s);

struct Stretch {
  int start = 0;
  int duration = 0;
  double eps = 0.0;
  double target = 0.0;  // J*T for rotation windows, axis angle for uniform-angle stretches
};

struct ProbeSample {
  qsim::ControlPulse pulse;
  StrategyKind strategy = StrategyKind::UniformRandom;
  std::vector<Stretch> stretches;
  bool fell_back = false;  // a rotation window was infeasible; the pulse is uniform random
};

ProbeSample sample_probe_detailed(const SamplingStrategy& strategy, Rng& rng);
qsim::ControlPulse sample_probe_pulse(const SamplingStrategy& strategy, Rng& rng);

// Polar angle of the rotation axis from +z towards +x, atan(dbz / J(eps)).
double axis_angle(const qsim::GeneralExchange& model, double dbz, double eps);
// Draws one axis angle uniformly on the interval reachable within [eps_min, eps_max] and
// returns the voltage realizing it.
Stretch sample_uniform_angle_stretch(const SamplingStrategy& strategy, int duration, Rng& rng);

}  // namespace stcal::probe
