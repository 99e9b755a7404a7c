#include "stcal/qsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "stcal/common/errors.hpp"
#include "stcal/qsim/units.hpp"

namespace stcal::qsim {

Unitary2 propagate(const ControlPulse& pulse, const ExchangeModel& model, const TransferKernel& kernel,
                   const NoiseRealization& noise) {
  pulse.validate();
  const std::size_t n = pulse.length();
  if (!noise.fast.empty() && noise.fast.size() != n) {
    throw DomainError("propagate: fast noise trace length does not match the pulse");
  }
  const std::vector<double> distorted = distort(kernel, pulse.epsilons);
  const double half_dbz = 0.5 * noise.dbz;
  Unitary2 u = Unitary2::identity();
  for (std::size_t t = 0; t < n; ++t) {
    double eps = distorted[t] + noise.eps_offset;
    if (!noise.fast.empty()) eps += noise.fast[t];
    if (!std::isfinite(eps)) {
      throw NumericError("propagate: non-finite detuning at segment " + std::to_string(t));
    }
    const double j = exchange_rate(model, eps);
    if (!std::isfinite(j)) {
      throw NumericError("propagate: non-finite exchange at segment " + std::to_string(t));
    }
    u = su2_exp(half_dbz, 0.0, 0.5 * j, kSegmentNs) * u;
  }
  return u;
}

NoiseRealization noiseless_realization(const QubitConfig& cfg) {
  NoiseRealization r;
  r.dbz = cfg.noise.dbz_mean;
  return r;
}

NoiseRealization sample_realization(const QubitConfig& cfg, int n_segments, Rng& rng) {
  NoiseRealization r;
  r.eps_offset = rng.normal(0.0, cfg.noise.sigma_eps);
  r.dbz = rng.normal(cfg.noise.dbz_mean, cfg.noise.sigma_dbz);
  r.fast = sample_fast_noise(cfg.noise.fast, n_segments, rng);
  return r;
}

Unitary2 propagate(const ControlPulse& pulse, const QubitConfig& cfg, const NoiseRealization& noise) {
  return propagate(pulse, cfg.exchange, cfg.kernel, noise);
}

MeasurementStats measure(const ControlPulse& pulse, const QubitConfig& cfg, Rng& rng) {
  const std::uint64_t key = rng.next_key();
  const int n = cfg.noise.enabled ? cfg.noise.n_samples : 1;
  if (n < 1) throw ConfigError("measure: n_samples must be >= 1");

  std::vector<double> p(n);
  for (int s = 0; s < n; ++s) {
    Rng sample_rng = Rng::derive(key, {static_cast<std::uint64_t>(s)});
    const NoiseRealization noise = cfg.noise.enabled
                                       ? sample_realization(cfg, static_cast<int>(pulse.length()), sample_rng)
                                       : noiseless_realization(cfg);
    double prob = propagate(pulse, cfg, noise).survival_probability();
    if (cfg.noise.enabled && cfg.noise.shot_sampling) {
      std::binomial_distribution<int> shots(cfg.noise.shots, std::clamp(prob, 0.0, 1.0));
      prob = static_cast<double>(shots(sample_rng.engine())) / cfg.noise.shots;
    }
    p[s] = prob;
  }

  MeasurementStats stats;
  double sum = 0.0;
  for (double v : p) sum += v;
  stats.p_mean = std::clamp(sum / n, 0.0, 1.0);
  double sq = 0.0;
  for (double v : p) sq += (v - stats.p_mean) * (v - stats.p_mean);
  stats.p_stderr = std::sqrt(sq) / n;
  return stats;
}

}  // namespace stcal::qsim
