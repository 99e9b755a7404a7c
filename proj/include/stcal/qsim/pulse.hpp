#pragma once

#include <cstddef>
#include <vector>

namespace stcal::qsim {

// Piecewise-constant detuning pulse on the 1 ns segment grid.
struct ControlPulse {
  std::vector<double> epsilons;  // mV, one per segment
  double dbz = 0.0;              // nominal field gradient, rad/ns

  std::size_t length() const { return epsilons.size(); }

  // Throws DomainError unless L >= 1 and every entry is finite.
  void validate() const;

  // 1 for the first length() entries, 0 up to width.
  std::vector<double> mask(std::size_t width) const;
};

// Segment-wise concatenation; dbz is taken from the first pulse.
ControlPulse concatenate(const ControlPulse& first, const ControlPulse& second);

}  // namespace stcal::qsim
