#pragma once

#include <variant>

namespace stcal::qsim {

// J(eps) = j0 * exp(eps / eps0)
struct GeneralExchange {
  double j0 = 0.0;    // rad/ns
  double eps0 = 1.0;  // mV
};

// Exponential at low detuning blended by a tanh switch into a linear branch b + m*eps.
struct SpecificExchange {
  double j0 = 0.0;     // rad/ns
  double eps0 = 1.0;   // mV
  double eps_s = 0.0;  // mV
  double w = 1.0;      // mV
  double b = 0.0;      // rad/ns
  double m = 0.0;      // rad/ns per mV
};

using ExchangeModel = std::variant<GeneralExchange, SpecificExchange>;

// Exchange rate in rad/ns. Throws DomainError for non-finite eps.
double exchange_rate(const ExchangeModel& model, double eps_mv);

// Inverse of the exponential model; rate must be > 0.
double general_voltage_for_rate(const GeneralExchange& model, double rate);

// Throws ConfigError unless eps0 > 0, w > 0 and J >= 0 on a grid over [eps_min, eps_max].
void validate_exchange(const ExchangeModel& model, double eps_min, double eps_max);

}  // namespace stcal::qsim
