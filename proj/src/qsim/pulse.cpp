#include "stcal/qsim/pulse.hpp"

#include <cmath>
#include <string>

#include "stcal/common/errors.hpp"

namespace stcal::qsim {

void ControlPulse::validate() const {
  if (epsilons.empty()) throw DomainError("pulse must have at least one segment");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!std::isfinite(epsilons[i])) {
      throw DomainError("pulse segment " + std::to_string(i) + " is not finite");
    }
  }
  if (!std::isfinite(dbz)) throw DomainError("pulse dbz is not finite");
}

std::vector<double> ControlPulse::mask(std::size_t width) const {
  std::vector<double> m(width, 0.0);
  for (std::size_t i = 0; i < width && i < epsilons.size(); ++i) m[i] = 1.0;
  return m;
}

ControlPulse concatenate(const ControlPulse& first, const ControlPulse& second) {
  ControlPulse out = first;
  out.epsilons.insert(out.epsilons.end(), second.epsilons.begin(), second.epsilons.end());
  return out;
}

}  // namespace stcal::qsim
