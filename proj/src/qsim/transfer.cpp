#include "stcal/qsim/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stcal/common/errors.hpp"
#include "stcal/qsim/units.hpp"

namespace stcal::qsim {

namespace {

// Tail cut for the causal step response: |s(t) - dc| below this is treated as settled.
constexpr double kCausalTailTolerance = 1e-13;
constexpr int kMaxCausalTaps = 4096;

}  // namespace

TransferKernel::TransferKernel(KernelParams params) : params_(std::move(params)) {
  if (std::holds_alternative<IdentityKernel>(params_)) {
    taps_ = {1.0};
    origin_ = 0;
  } else if (const auto* g = std::get_if<GaussianKernel>(&params_)) {
    if (!(g->sigma >= 0.0)) throw ConfigError("gaussian kernel: sigma must be >= 0");
    if (g->sigma == 0.0) {
      taps_ = {1.0};
      origin_ = 0;
    } else {
      const int r = static_cast<int>(std::ceil(6.0 * g->sigma));
      taps_.resize(2 * r + 1);
      for (int tau = -r; tau <= r; ++tau) {
        taps_[tau + r] = std::exp(-0.5 * tau * tau / (g->sigma * g->sigma));
      }
      origin_ = r;
    }
  } else {
    const auto& c = std::get<CausalKernel>(params_);
    if (!(c.rise_time > 0.0 && c.osc_period > 0.0 && c.osc_decay > 0.0)) {
      throw ConfigError("causal kernel: time constants must be > 0");
    }
    auto step = [&c](double t) {
      return (1.0 - std::exp(-t / c.rise_time)) *
             (1.0 - std::exp(-t / c.osc_decay) * std::cos(kTwoPi * t / c.osc_period));
    };
    int n = 1;
    while (n < kMaxCausalTaps) {
      const double envelope = std::exp(-n / c.rise_time) + std::exp(-n / c.osc_decay);
      if (envelope < kCausalTailTolerance) break;
      ++n;
    }
    taps_.resize(n);
    for (int t = 0; t < n; ++t) taps_[t] = step(t + 1.0) - step(t);
    origin_ = 0;
  }
  // Normalize to the configured DC gain.
  const double sum = std::accumulate(taps_.begin(), taps_.end(), 0.0);
  const double gain = dc_gain();
  for (double& k : taps_) k *= gain / sum;
}

int TransferKernel::half_support() const {
  return std::max(origin_, static_cast<int>(taps_.size()) - 1 - origin_);
}

double TransferKernel::dc_gain() const {
  if (const auto* c = std::get_if<CausalKernel>(&params_)) return c->dc_gain;
  return 1.0;
}

std::string TransferKernel::kind() const {
  if (std::holds_alternative<IdentityKernel>(params_)) return "identity";
  if (std::holds_alternative<GaussianKernel>(params_)) return "gaussian";
  return "causal";
}

double TransferKernel::at(int tau) const {
  const int i = tau + origin_;
  if (i < 0 || i >= static_cast<int>(taps_.size())) return 0.0;
  return taps_[i];
}

std::vector<double> apply_transfer(const TransferKernel& kernel, std::span<const double> eps,
                                   int pre_pad, int post_pad) {
  if (pre_pad < kernel.half_support() || post_pad < kernel.half_support()) {
    throw DomainError("apply_transfer: pads must cover the kernel half-support");
  }
  const int n = static_cast<int>(eps.size());
  const auto taps = kernel.taps();
  const int origin = kernel.origin();
  std::vector<double> out(n + pre_pad + post_pad, 0.0);
  for (int j = 0; j < static_cast<int>(out.size()); ++j) {
    const int t = j - pre_pad;
    double acc = 0.0;
    for (int i = 0; i < static_cast<int>(taps.size()); ++i) {
      const int src = t - (i - origin);
      if (src >= 0 && src < n) acc += taps[i] * eps[src];
    }
    out[j] = acc;
  }
  return out;
}

std::vector<double> distort(const TransferKernel& kernel, std::span<const double> eps) {
  const int pad = kernel.half_support();
  std::vector<double> full = apply_transfer(kernel, eps, pad, pad);
  return {full.begin() + pad, full.begin() + pad + static_cast<std::ptrdiff_t>(eps.size())};
}

}  // namespace stcal::qsim
