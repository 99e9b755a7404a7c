#include "stcal/optimize/config.hpp"

#include <cmath>
#include <fstream>

#include "stcal/common/errors.hpp"

namespace stcal::optimize {

using nlohmann::json;

int OptimizeConfig::total_iterations() const {
  int n = 0;
  for (const auto& s : stages) n += s.iterations;
  return n;
}

void OptimizeConfig::validate() const {
  if (n_gatesets < 1) throw ConfigError("n_gatesets must be >= 1");
  if (gate_segments < 1) throw ConfigError("gate_segments must be >= 1");
  if (stages.empty()) throw ConfigError("optimization needs at least one stage");
  if (top_k < 1 || top_k > n_gatesets) throw ConfigError("top_k must be in [1, n_gatesets]");
  if (n_noise < 1) throw ConfigError("n_noise must be >= 1");
  if (history_stride < 1) throw ConfigError("history_stride must be >= 1");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    const std::string where = "stage " + std::to_string(i) + ": ";
    if (s.iterations < 0) throw ConfigError(where + "iterations must be >= 0");
    if (!(s.lr > 0)) throw ConfigError(where + "lr must be > 0");
    if (s.max_len < 1) throw ConfigError(where + "max_len must be >= 1");
    if (s.exponent != 2 && s.exponent != 4) throw ConfigError(where + "exponent must be 2 or 4");
    if (s.kb < 1 || n_gatesets % s.kb != 0) throw ConfigError(where + "n_gatesets must be a multiple of kb");
    if (!(s.gamma >= 0)) throw ConfigError(where + "gamma must be >= 0");
    if (!(s.delta >= 0 && s.delta <= 1)) throw ConfigError(where + "delta must be in [0, 1]");
  }
}

OptimizeConfig optimize_config_from_json(const json& j) {
  OptimizeConfig c;
  try {
    c.n_gatesets = j.value("n_gatesets", c.n_gatesets);
    c.gate_segments = j.value("gate_segments", c.gate_segments);
    c.seed = j.value("seed", c.seed);
    c.top_k = j.value("top_k", c.top_k);
    c.n_noise = j.value("n_noise", c.n_noise);
    c.history_stride = j.value("history_stride", c.history_stride);
    const auto units = j.value("step_units", std::string("normalized"));
    if (units == "normalized") c.units = StepUnits::Normalized;
    else if (units == "mv") c.units = StepUnits::Millivolt;
    else throw ConfigError("step_units must be 'normalized' or 'mv'");
    Stage prev;
    for (const auto& s : j.at("stages")) {
      Stage st = prev;
      st.iterations = s.at("iterations").get<int>();
      st.lr = s.value("lr", prev.lr);
      st.max_len = s.value("max_len", prev.max_len);
      st.exponent = s.value("exponent", prev.exponent);
      st.kb = s.value("kb", prev.kb);
      st.gamma = s.value("gamma", prev.gamma);
      st.delta = s.value("delta", prev.delta);
      c.stages.push_back(st);
      prev = st;
    }
    if (j.contains("iteration_scale")) {
      const double f = j.at("iteration_scale").get<double>();
      for (auto& s : c.stages) s.iterations = static_cast<int>(std::lround(s.iterations * f));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad optimize config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const OptimizeConfig& c) {
  json stages = json::array();
  for (const auto& s : c.stages) {
    stages.push_back({{"iterations", s.iterations},
                      {"lr", s.lr},
                      {"max_len", s.max_len},
                      {"exponent", s.exponent},
                      {"kb", s.kb},
                      {"gamma", s.gamma},
                      {"delta", s.delta}});
  }
  return {{"n_gatesets", c.n_gatesets},
          {"gate_segments", c.gate_segments},
          {"seed", c.seed},
          {"top_k", c.top_k},
          {"n_noise", c.n_noise},
          {"step_units", c.units == StepUnits::Normalized ? "normalized" : "mv"},
          {"history_stride", c.history_stride},
          {"stages", stages}};
}

OptimizeConfig load_optimize_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open optimize config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  return optimize_config_from_json(j);
}

}  // namespace stcal::optimize
