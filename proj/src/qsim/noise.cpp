#include "stcal/qsim/noise.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>

#include "stcal/common/errors.hpp"
#include "stcal/qsim/units.hpp"

namespace stcal::qsim {

namespace {

constexpr double kV2ToMv2 = 1e6;

// FFTW planning is not thread-safe; execution with new-array functions is.
class C2rPlanCache {
 public:
  ~C2rPlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<std::complex<double>> in(n / 2 + 1);
    std::vector<double> out(n);
    fftw_plan plan = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw NumericError("fftw: cannot plan c2r transform");
    plans_.emplace(n, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<int, fftw_plan> plans_;
};

C2rPlanCache& plan_cache() {
  static C2rPlanCache cache;
  return cache;
}

}  // namespace

double FastNoisePsd::density(double f) const {
  if (f >= f_low && f <= f_knee) return s0 / std::pow(f, low_exponent);
  if (f > f_knee && f <= f_high) return s0 / std::pow(f_knee, low_exponent);
  return 0.0;
}

double FastNoisePsd::band_power(double f1, double f2) const {
  double total = 0.0;
  const double a1 = std::max(f1, f_low);
  const double a2 = std::min(f2, f_knee);
  if (a2 > a1) {
    const double e = 1.0 - low_exponent;
    total += (e == 0.0) ? s0 * std::log(a2 / a1) : s0 * (std::pow(a2, e) - std::pow(a1, e)) / e;
  }
  const double b1 = std::max(f1, f_knee);
  const double b2 = std::min(f2, f_high);
  if (b2 > b1) total += s0 / std::pow(f_knee, low_exponent) * (b2 - b1);
  return total;
}

void NoiseConfig::validate() const {
  if (n_samples < 1) throw ConfigError("noise: n_samples must be >= 1");
  if (!(sigma_eps >= 0.0) || !(sigma_dbz >= 0.0)) throw ConfigError("noise: sigmas must be >= 0");
  if (!(fast.s0 >= 0.0)) throw ConfigError("noise: s0 must be >= 0");
  if (!(fast.f_low < fast.f_knee && fast.f_knee < fast.f_high)) {
    throw ConfigError("noise: band edges must be strictly increasing");
  }
  if (shot_sampling && shots < 1) throw ConfigError("noise: shots must be >= 1");
}

std::vector<double> fast_noise_bin_powers(const FastNoisePsd& psd, int n_segments) {
  const double df = kSampleRateHz / n_segments;
  const double nyquist = 0.5 * kSampleRateHz;
  std::vector<double> powers(n_segments / 2);
  for (int k = 1; k <= n_segments / 2; ++k) {
    const double lo = (k - 0.5) * df;
    const double hi = std::min((k + 0.5) * df, nyquist);
    powers[k - 1] = psd.band_power(lo, hi) * kV2ToMv2;
  }
  return powers;
}

std::vector<double> sample_fast_noise(const FastNoisePsd& psd, int n_segments, Rng& rng) {
  if (n_segments < 1) throw DomainError("sample_fast_noise: n_segments must be >= 1");
  std::vector<double> out(n_segments, 0.0);
  if (psd.s0 == 0.0 || n_segments < 2) return out;

  const std::vector<double> powers = fast_noise_bin_powers(psd, n_segments);
  std::vector<std::complex<double>> spectrum(n_segments / 2 + 1, 0.0);
  for (int k = 1; k <= n_segments / 2; ++k) {
    const double phase = rng.uniform(0.0, kTwoPi);
    const double amplitude = std::sqrt(2.0 * powers[k - 1]);
    if (2 * k == n_segments) {
      // The Nyquist bin is real: amplitude * cos(phase) * (-1)^t.
      spectrum[k] = amplitude * std::cos(phase);
    } else {
      // c2r adds the conjugate bin, giving amplitude * cos(2 pi k t / n + phase).
      spectrum[k] = 0.5 * amplitude * std::polar(1.0, phase);
    }
  }
  fftw_execute_dft_c2r(plan_cache().get(n_segments), reinterpret_cast<fftw_complex*>(spectrum.data()),
                       out.data());
  return out;
}

}  // namespace stcal::qsim
