#pragma once

#include <vector>

#include "stcal/common/rng.hpp"

namespace stcal::qsim {

// One-sided PSD of the fast detuning noise, V^2/Hz:
//   s0 / f^a          for f_low <= f <= f_knee
//   s0 / f_knee^a     for f_knee < f <= f_high
//   0                 elsewhere
struct FastNoisePsd {
  double s0 = 0.0;  // V^2/Hz (times Hz^a on the 1/f^a branch)
  double low_exponent = 0.7;
  double f_low = 5e4;
  double f_knee = 1e6;
  double f_high = 1e10;

  double density(double f_hz) const;
  // Closed-form integral over [f1, f2], V^2.
  double band_power(double f1, double f2) const;
};

struct NoiseConfig {
  bool enabled = true;
  double sigma_eps = 0.0;  // quasi-static detuning offset, mV
  double dbz_mean = 0.0;   // device field gradient, rad/ns
  double sigma_dbz = 0.0;  // quasi-static gradient spread, rad/ns
  FastNoisePsd fast;
  int n_samples = 60;
  // Replace exact probabilities by binomial shot estimates. Off by default.
  bool shot_sampling = false;
  int shots = 1000;

  void validate() const;
};

// Power per DFT bin k = 1..floor(n/2) for an n-segment trace, mV^2. Bin k covers
// [(k - 1/2) df, (k + 1/2) df] clipped at Nyquist, df = 1 GHz / n. Frequencies below the
// pulse's fundamental are left to the quasi-static term.
std::vector<double> fast_noise_bin_powers(const FastNoisePsd& psd, int n_segments);

// One realization of the fast noise on an n-segment grid, mV. Random-phase synthesis with
// fixed bin amplitudes sqrt(2 P_k).
std::vector<double> sample_fast_noise(const FastNoisePsd& psd, int n_segments, Rng& rng);

}  // namespace stcal::qsim
