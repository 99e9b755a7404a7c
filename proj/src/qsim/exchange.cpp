#include "stcal/qsim/exchange.hpp"

#include <cmath>
#include <string>

#include "stcal/common/errors.hpp"

namespace stcal::qsim {

namespace {

struct RateVisitor {
  double eps;
  double operator()(const GeneralExchange& g) const { return g.j0 * std::exp(eps / g.eps0); }
  double operator()(const SpecificExchange& s) const {
    const double expo = s.j0 * std::exp(eps / s.eps0);
    const double blend = 0.5 * (1.0 + std::tanh((eps - s.eps_s) / s.w));
    return expo - blend * (expo - (s.b + s.m * eps));
  }
};

}  // namespace

double exchange_rate(const ExchangeModel& model, double eps_mv) {
  if (!std::isfinite(eps_mv)) throw DomainError("exchange_rate: non-finite detuning");
  return std::visit(RateVisitor{eps_mv}, model);
}

double general_voltage_for_rate(const GeneralExchange& model, double rate) {
  if (!(rate > 0.0) || !(model.j0 > 0.0)) throw DomainError("general_voltage_for_rate: rate must be > 0");
  return model.eps0 * std::log(rate / model.j0);
}

void validate_exchange(const ExchangeModel& model, double eps_min, double eps_max) {
  std::visit(
      [](const auto& m) {
        if (!(m.eps0 > 0.0)) throw ConfigError("exchange: eps0 must be > 0");
        if (!(m.j0 >= 0.0)) throw ConfigError("exchange: j0 must be >= 0");
      },
      model);
  if (const auto* s = std::get_if<SpecificExchange>(&model); s && !(s->w > 0.0)) {
    throw ConfigError("exchange: w must be > 0");
  }
  if (!(eps_min < eps_max)) throw ConfigError("voltage range must satisfy eps_min < eps_max");
  constexpr int kGrid = 1000;
  for (int i = 0; i <= kGrid; ++i) {
    const double eps = eps_min + (eps_max - eps_min) * i / kGrid;
    const double j = exchange_rate(model, eps);
    if (!(j >= 0.0)) {
      throw ConfigError("exchange: J(" + std::to_string(eps) + " mV) is negative");
    }
  }
}

}  // namespace stcal::qsim
