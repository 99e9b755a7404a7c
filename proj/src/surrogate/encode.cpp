#include "stcal/surrogate/encode.hpp"

#include <cmath>

#include "stcal/common/errors.hpp"

namespace stcal::surrogate {

Normalization default_normalization(const qsim::QubitConfig& cfg, int l_max) {
  if (l_max < 1) throw ConfigError("l_max must be >= 1");
  Normalization n;
  n.eps_scale = 1.0 / std::abs(cfg.eps_min);
  n.dbz_scale = 1.0;
  n.l_max = l_max;
  return n;
}

nlohmann::json to_json(const Normalization& n) {
  return {{"eps_scale_per_mv", n.eps_scale}, {"dbz_scale_ns_per_rad", n.dbz_scale}, {"l_max", n.l_max}};
}

Normalization normalization_from_json(const nlohmann::json& j) {
  Normalization n;
  try {
    n.eps_scale = j.at("eps_scale_per_mv").get<double>();
    n.dbz_scale = j.at("dbz_scale_ns_per_rad").get<double>();
    n.l_max = j.at("l_max").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad normalization block: ") + e.what());
  }
  if (n.l_max < 1 || !std::isfinite(n.eps_scale) || !std::isfinite(n.dbz_scale)) {
    throw ConfigError("bad normalization values");
  }
  return n;
}

namespace {

void check_fits(const qsim::ControlPulse& p, const Normalization& norm) {
  if (p.length() > static_cast<std::size_t>(norm.l_max)) {
    throw DomainError("pulse of " + std::to_string(p.length()) + " segments exceeds encoder capacity " +
                      std::to_string(norm.l_max));
  }
}

}  // namespace

Eigen::MatrixXd encode_input(const qsim::ControlPulse& pulse, const Normalization& norm) {
  check_fits(pulse, norm);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(norm.l_max, 3);
  for (std::size_t t = 0; t < pulse.length(); ++t) {
    x(t, 0) = pulse.epsilons[t] * norm.eps_scale;
    x(t, 1) = pulse.dbz * norm.dbz_scale;
    x(t, 2) = 1.0;
  }
  return x;
}

template <typename T>
Mat<T> batch_input(std::span<const qsim::ControlPulse* const> pulses, const Normalization& norm, int pad) {
  const Eigen::Index B = static_cast<Eigen::Index>(pulses.size());
  const Eigen::Index S = norm.l_max + 2 * pad;
  Mat<T> x = Mat<T>::Zero(3, S * B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& p = *pulses[b];
    check_fits(p, norm);
    const T dbz = static_cast<T>(p.dbz * norm.dbz_scale);
    for (std::size_t t = 0; t < p.length(); ++t) {
      const Eigen::Index col = (static_cast<Eigen::Index>(t) + pad) * B + b;
      x(0, col) = static_cast<T>(p.epsilons[t] * norm.eps_scale);
      x(1, col) = dbz;
      x(2, col) = T(1);
    }
  }
  return x;
}

template Mat<float> batch_input<float>(std::span<const qsim::ControlPulse* const>, const Normalization&, int);
template Mat<double> batch_input<double>(std::span<const qsim::ControlPulse* const>, const Normalization&, int);
template Mat<long double> batch_input<long double>(std::span<const qsim::ControlPulse* const>, const Normalization&, int);

}  // namespace stcal::surrogate
