#include "stcal/probe/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "stcal/common/errors.hpp"
#include "stcal/qsim/units.hpp"

namespace stcal::probe {

using nlohmann::json;

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::UniformRandom: return "uniform_random";
    case StrategyKind::RotationWindow: return "rotation_window";
    case StrategyKind::UniformAngle: return "uniform_angle";
  }
  return "unknown";
}

StrategyKind strategy_from_string(const std::string& s) {
  if (s == "uniform_random") return StrategyKind::UniformRandom;
  if (s == "rotation_window") return StrategyKind::RotationWindow;
  if (s == "uniform_angle") return StrategyKind::UniformAngle;
  throw ConfigError("unknown sampling strategy '" + s + "'");
}

void SamplingStrategy::validate() const {
  const double fracs[] = {frac_uniform, frac_window, frac_angle};
  for (double f : fracs) {
    if (!(f >= 0.0)) throw ConfigError("strategy fractions must be >= 0");
  }
  if (std::abs(frac_uniform + frac_window + frac_angle - 1.0) > 1e-9) {
    throw ConfigError("strategy fractions must sum to 1");
  }
  if (length_min < 1 || length_max < length_min) throw ConfigError("bad probe length range");
  if (!(eps_min < eps_max)) throw ConfigError("bad probe voltage range");
  if (!(assumed.j0 > 0.0) || !(assumed.eps0 > 0.0)) throw ConfigError("assumed exchange needs j0 > 0, eps0 > 0");
  if (!(dbz > 0.0)) throw ConfigError("probe sampling needs a positive nominal dBz");
  if (!(window_min > 0.0) || window_max < window_min) throw ConfigError("bad rotation window");
  if (max_retries < 1) throw ConfigError("max_retries must be >= 1");
}

SamplingStrategy strategy_from_config(const json& probe, const qsim::QubitConfig& cfg) {
  SamplingStrategy s;
  try {
    if (probe.contains("fractions")) {
      const json& f = probe.at("fractions");
      s.frac_uniform = f.value("uniform_random", s.frac_uniform);
      s.frac_window = f.value("rotation_window", s.frac_window);
      s.frac_angle = f.value("uniform_angle", s.frac_angle);
    }
    if (probe.contains("length_range")) {
      const auto r = probe.at("length_range").get<std::vector<int>>();
      if (r.size() != 2) throw ConfigError("length_range must have two entries");
      s.length_min = r[0];
      s.length_max = r[1];
    }
    s.max_retries = probe.value("max_retries", s.max_retries);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad probe block: ") + e.what());
  }
  if (probe.contains("assumed_exchange")) {
    const auto model = qsim::exchange_from_json(probe.at("assumed_exchange"));
    const auto* g = std::get_if<qsim::GeneralExchange>(&model);
    if (!g) throw ConfigError("the assumed probe exchange model must be 'general'");
    s.assumed = *g;
  } else {
    s.assumed = qsim::GeneralExchange{qsim::mhz_to_rad_per_ns(159.0), 0.69};
  }
  s.eps_min = cfg.eps_min;
  s.eps_max = cfg.eps_max;
  s.dbz = cfg.nominal_dbz;
  s.validate();
  return s;
}

json to_json(const SamplingStrategy& s) {
  return {{"fractions", {{"uniform_random", s.frac_uniform}, {"rotation_window", s.frac_window}, {"uniform_angle", s.frac_angle}}},
          {"length_range", {s.length_min, s.length_max}},
          {"assumed_exchange", qsim::exchange_to_json(s.assumed)},
          {"voltage_range_mv", {s.eps_min, s.eps_max}},
          {"dbz_rad_per_ns", s.dbz},
          {"max_retries", s.max_retries}};
}

double axis_angle(const qsim::GeneralExchange& model, double dbz, double eps) {
  return std::atan2(dbz, qsim::exchange_rate(model, eps));
}

Stretch sample_uniform_angle_stretch(const SamplingStrategy& s, int duration, Rng& rng) {
  // J is increasing in eps, so the angle decreases from eps_min to eps_max.
  const double lo = axis_angle(s.assumed, s.dbz, s.eps_max);
  const double hi = axis_angle(s.assumed, s.dbz, s.eps_min);
  const double theta = rng.uniform(lo, hi);
  const double rate = s.dbz / std::tan(theta);
  const double eps = std::clamp(qsim::general_voltage_for_rate(s.assumed, rate), s.eps_min, s.eps_max);
  return Stretch{0, duration, eps, theta};
}

namespace {

// Stretch length: uniform on [2, L], clipped to what is left. A remainder shorter than
// min_piece is absorbed into the current stretch.
int draw_duration(int length, int remaining, int min_piece, Rng& rng) {
  int d = std::min(rng.uniform_int(std::min(2, length), length), remaining);
  if (remaining - d < min_piece) d = remaining;
  return d;
}

qsim::ControlPulse uniform_pulse(const SamplingStrategy& s, int length, Rng& rng) {
  qsim::ControlPulse p;
  p.dbz = s.dbz;
  p.epsilons.resize(length);
  for (auto& e : p.epsilons) e = rng.uniform(s.eps_min, s.eps_max);
  return p;
}

}  // namespace

ProbeSample sample_probe_detailed(const SamplingStrategy& s, Rng& rng) {
  const int length = rng.uniform_int(s.length_min, s.length_max);
  const double u = rng.uniform(0.0, 1.0);
  ProbeSample out;
  if (u < s.frac_uniform) {
    out.strategy = StrategyKind::UniformRandom;
    out.pulse = uniform_pulse(s, length, rng);
    return out;
  }
  out.strategy = u < s.frac_uniform + s.frac_window ? StrategyKind::RotationWindow : StrategyKind::UniformAngle;
  out.pulse.dbz = s.dbz;
  out.pulse.epsilons.reserve(length);
  const double j_lo = qsim::exchange_rate(s.assumed, s.eps_min);
  const double j_hi = qsim::exchange_rate(s.assumed, s.eps_max);
  // Shortest stretch that can still accumulate window_min.
  const int min_piece = std::max(2, static_cast<int>(std::ceil(s.window_min / j_hi - 1e-12)));

  int pos = 0;
  while (pos < length) {
    const int remaining = length - pos;
    Stretch st;
    if (out.strategy == StrategyKind::UniformAngle) {
      st = sample_uniform_angle_stretch(s, draw_duration(length, remaining, 2, rng), rng);
    } else {
      bool ok = false;
      for (int attempt = 0; attempt < s.max_retries && !ok; ++attempt) {
        const int d = draw_duration(length, remaining, min_piece, rng);
        const double lo = std::max(s.window_min, j_lo * d);
        const double hi = std::min(s.window_max, j_hi * d);
        if (lo > hi) continue;
        const double phase = rng.uniform(lo, hi);
        const double eps = std::clamp(qsim::general_voltage_for_rate(s.assumed, phase / d), s.eps_min, s.eps_max);
        st = Stretch{0, d, eps, phase};
        ok = true;
      }
      if (!ok) {
        ProbeSample fb;
        fb.strategy = StrategyKind::UniformRandom;
        fb.fell_back = true;
        fb.pulse = uniform_pulse(s, length, rng);
        return fb;
      }
    }
    st.start = pos;
    out.pulse.epsilons.insert(out.pulse.epsilons.end(), st.duration, st.eps);
    out.stretches.push_back(st);
    pos += st.duration;
  }
  return out;
}

qsim::ControlPulse sample_probe_pulse(const SamplingStrategy& strategy, Rng& rng) {
  return sample_probe_detailed(strategy, rng).pulse;
}

}  // namespace stcal::probe
