#pragma once

#include <vector>

#include "stcal/common/rng.hpp"
#include "stcal/qsim/config.hpp"
#include "stcal/qsim/exchange.hpp"
#include "stcal/qsim/pulse.hpp"
#include "stcal/qsim/transfer.hpp"
#include "stcal/qsim/unitary.hpp"

namespace stcal::qsim {

// One Monte Carlo draw of the noise acting during a pulse.
struct NoiseRealization {
  double eps_offset = 0.0;      // quasi-static detuning offset, mV
  double dbz = 0.0;             // field gradient for this draw, rad/ns
  std::vector<double> fast;     // fast detuning noise per segment, mV; empty means none
};

struct MeasurementStats {
  double p_mean = 0.0;    // mean |<0|U_n|0>|^2 over the Monte Carlo samples
  double p_stderr = 0.0;  // (1/N) sqrt(sum_n (p_n - p_mean)^2)
};

// Time-ordered product of exact per-segment propagators under
//   H_t = J(eps'_t)/2 Z + dBz/2 X,   eps'_t = (k * eps)_t + eps_offset + fast_t.
// Throws NumericError naming the segment if any intermediate is non-finite.
Unitary2 propagate(const ControlPulse& pulse, const ExchangeModel& model,
                   const TransferKernel& kernel, const NoiseRealization& noise);

// The noise-free realization: no offsets, device gradient noise.dbz_mean.
NoiseRealization noiseless_realization(const QubitConfig& cfg);
NoiseRealization sample_realization(const QubitConfig& cfg, int n_segments, Rng& rng);

Unitary2 propagate(const ControlPulse& pulse, const QubitConfig& cfg, const NoiseRealization& noise);

// Monte Carlo estimate of the |0> survival probability and its standard error. With noise
// disabled a single exact propagation is used and p_stderr is 0. Sample n uses a substream
// derived from one key drawn from rng, so the result is independent of evaluation order.
MeasurementStats measure(const ControlPulse& pulse, const QubitConfig& cfg, Rng& rng);

}  // namespace stcal::qsim
