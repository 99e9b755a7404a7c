#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace stcal::qsim {

struct IdentityKernel {};

struct GaussianKernel {
  double sigma = 1.0;  // ns
};

// Causal stand-in for a measured cable response. Step response
//   s(t) = dc_gain * (1 - exp(-t/rise_time)) * (1 - exp(-t/osc_decay) cos(2 pi t/osc_period)),
// taps k(t) = s(t+1) - s(t) for t >= 0.
struct CausalKernel {
  double rise_time = 1.0;   // ns
  double osc_period = 4.0;  // ns
  double osc_decay = 2.0;   // ns
  double dc_gain = 1.0;
};

using KernelParams = std::variant<IdentityKernel, GaussianKernel, CausalKernel>;

// Discrete convolution kernel at 1 ns spacing. taps()[i] is k(tau) for tau = i - origin().
class TransferKernel {
 public:
  TransferKernel() : TransferKernel(IdentityKernel{}) {}
  explicit TransferKernel(KernelParams params);

  static TransferKernel identity() { return TransferKernel(IdentityKernel{}); }
  static TransferKernel gaussian(double sigma) { return TransferKernel(GaussianKernel{sigma}); }
  static TransferKernel causal(const CausalKernel& k) { return TransferKernel(k); }

  const KernelParams& params() const { return params_; }
  std::span<const double> taps() const { return taps_; }
  int origin() const { return origin_; }
  int support() const { return static_cast<int>(taps_.size()); }
  // Largest |tau| with a nonzero tap.
  int half_support() const;
  double dc_gain() const;
  std::string kind() const;

  // k(tau), zero outside the support.
  double at(int tau) const;

 private:
  KernelParams params_;
  std::vector<double> taps_;
  int origin_ = 0;
};

// eps'_t = sum_tau k(t - tau) eps_tau with eps = 0 outside the pulse. The result covers
// t = -pre_pad .. L + post_pad - 1. Each pad must be >= half_support().
std::vector<double> apply_transfer(const TransferKernel& kernel, std::span<const double> eps,
                                   int pre_pad, int post_pad);

// The distorted trace restricted to the L programmed segments.
std::vector<double> distort(const TransferKernel& kernel, std::span<const double> eps);

}  // namespace stcal::qsim
