#include "stcal/qsim/config.hpp"

#include <cmath>
#include <fstream>

#include "stcal/common/errors.hpp"
#include "stcal/qsim/units.hpp"

namespace stcal::qsim {

using nlohmann::json;

namespace {

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

ExchangeModel exchange_from_json(const json& j) {
  const auto model = require<std::string>(j, "model");
  if (model == "general") {
    return GeneralExchange{mhz_to_rad_per_ns(require<double>(j, "j0_mhz")), require<double>(j, "eps0_mv")};
  }
  if (model == "specific") {
    SpecificExchange s;
    s.j0 = mhz_to_rad_per_ns(require<double>(j, "j0_mhz"));
    s.eps0 = require<double>(j, "eps0_mv");
    s.eps_s = require<double>(j, "eps_s_mv");
    s.w = require<double>(j, "w_mv");
    s.b = mhz_to_rad_per_ns(require<double>(j, "b_mhz"));
    s.m = mhz_to_rad_per_ns(require<double>(j, "m_mhz_per_mv"));
    return s;
  }
  throw ConfigError("unknown exchange model '" + model + "'");
}

json exchange_to_json(const ExchangeModel& m) {
  if (const auto* g = std::get_if<GeneralExchange>(&m)) {
    return {{"model", "general"}, {"j0_mhz", rad_per_ns_to_mhz(g->j0)}, {"eps0_mv", g->eps0}};
  }
  const auto& s = std::get<SpecificExchange>(m);
  return {{"model", "specific"},          {"j0_mhz", rad_per_ns_to_mhz(s.j0)}, {"eps0_mv", s.eps0},
          {"eps_s_mv", s.eps_s},          {"w_mv", s.w},                       {"b_mhz", rad_per_ns_to_mhz(s.b)},
          {"m_mhz_per_mv", rad_per_ns_to_mhz(s.m)}};
}

namespace {

TransferKernel kernel_from_json(const json& j) {
  const auto type = require<std::string>(j, "type");
  if (type == "identity") return TransferKernel::identity();
  if (type == "gaussian") return TransferKernel::gaussian(require<double>(j, "sigma_ns"));
  if (type == "causal") {
    CausalKernel c;
    c.rise_time = require<double>(j, "rise_time_ns");
    c.osc_period = require<double>(j, "osc_period_ns");
    c.osc_decay = require<double>(j, "osc_decay_ns");
    c.dc_gain = j.value("dc_gain", 1.0);
    return TransferKernel::causal(c);
  }
  throw ConfigError("unknown kernel type '" + type + "'");
}

json kernel_to_json(const TransferKernel& k) {
  if (const auto* g = std::get_if<GaussianKernel>(&k.params())) return {{"type", "gaussian"}, {"sigma_ns", g->sigma}};
  if (const auto* c = std::get_if<CausalKernel>(&k.params())) {
    return {{"type", "causal"},
            {"rise_time_ns", c->rise_time},
            {"osc_period_ns", c->osc_period},
            {"osc_decay_ns", c->osc_decay},
            {"dc_gain", c->dc_gain}};
  }
  return {{"type", "identity"}};
}

NoiseConfig noise_from_json(const json& j) {
  NoiseConfig n;
  n.enabled = j.value("enabled", true);
  n.sigma_eps = require<double>(j, "sigma_eps_mv");
  n.dbz_mean = mhz_to_rad_per_ns(require<double>(j, "dbz_mean_mhz"));
  n.sigma_dbz = mhz_to_rad_per_ns(require<double>(j, "sigma_dbz_mhz"));
  n.n_samples = require<int>(j, "n_samples");
  n.shot_sampling = j.value("shot_sampling", false);
  n.shots = j.value("shots", 1000);
  if (j.contains("fast")) {
    const json& f = j.at("fast");
    n.fast.s0 = require<double>(f, "s0_v2_per_hz");
    n.fast.low_exponent = f.value("low_exponent", 0.7);
    n.fast.f_low = f.value("f_low_hz", 5e4);
    n.fast.f_knee = f.value("f_knee_hz", 1e6);
    n.fast.f_high = f.value("f_high_hz", 1e10);
  }
  return n;
}

json noise_to_json(const NoiseConfig& n) {
  return {{"enabled", n.enabled},
          {"sigma_eps_mv", n.sigma_eps},
          {"dbz_mean_mhz", rad_per_ns_to_mhz(n.dbz_mean)},
          {"sigma_dbz_mhz", rad_per_ns_to_mhz(n.sigma_dbz)},
          {"n_samples", n.n_samples},
          {"shot_sampling", n.shot_sampling},
          {"shots", n.shots},
          {"fast",
           {{"s0_v2_per_hz", n.fast.s0},
            {"low_exponent", n.fast.low_exponent},
            {"f_low_hz", n.fast.f_low},
            {"f_knee_hz", n.fast.f_knee},
            {"f_high_hz", n.fast.f_high}}}};
}

}  // namespace

void QubitConfig::validate() const {
  validate_exchange(exchange, eps_min, eps_max);
  noise.validate();
  if (!std::isfinite(nominal_dbz)) throw ConfigError("nominal dbz must be finite");
  if (hold) {
    if (hold->per_gate < 0 || hold->final < 0) throw ConfigError("hold segment counts must be >= 0");
    if (hold->eps_hold < eps_min || hold->eps_hold > eps_max) {
      throw ConfigError("hold voltage must lie inside the voltage range");
    }
  }
}

QubitConfig qubit_config_from_json(const json& j) {
  QubitConfig cfg;
  cfg.name = j.value("name", std::string("unnamed"));
  if (!j.contains("exchange") || !j.contains("kernel") || !j.contains("noise")) {
    throw ConfigError("qubit config needs 'exchange', 'kernel' and 'noise' blocks");
  }
  cfg.exchange = exchange_from_json(j.at("exchange"));
  cfg.kernel = kernel_from_json(j.at("kernel"));
  cfg.noise = noise_from_json(j.at("noise"));
  const auto range = require<std::vector<double>>(j, "voltage_range_mv");
  if (range.size() != 2) throw ConfigError("voltage_range_mv must have two entries");
  cfg.eps_min = range[0];
  cfg.eps_max = range[1];
  cfg.nominal_dbz = mhz_to_rad_per_ns(j.value("nominal_dbz_mhz", rad_per_ns_to_mhz(cfg.noise.dbz_mean)));
  if (j.contains("hold") && !j.at("hold").is_null()) {
    const json& h = j.at("hold");
    cfg.hold = HoldSpec{require<double>(h, "eps_mv"), require<int>(h, "per_gate"), require<int>(h, "final")};
  }
  cfg.validate();
  return cfg;
}

json to_json(const QubitConfig& cfg) {
  json j = {{"name", cfg.name},
            {"exchange", exchange_to_json(cfg.exchange)},
            {"kernel", kernel_to_json(cfg.kernel)},
            {"noise", noise_to_json(cfg.noise)},
            {"voltage_range_mv", {cfg.eps_min, cfg.eps_max}},
            {"nominal_dbz_mhz", rad_per_ns_to_mhz(cfg.nominal_dbz)}};
  if (cfg.hold) {
    j["hold"] = {{"eps_mv", cfg.hold->eps_hold}, {"per_gate", cfg.hold->per_gate}, {"final", cfg.hold->final}};
  }
  return j;
}

QubitConfig load_qubit_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open qubit config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  return qubit_config_from_json(j);
}

}  // namespace stcal::qsim
