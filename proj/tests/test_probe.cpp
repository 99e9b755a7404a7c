#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "stcal/common/errors.hpp"
#include "stcal/probe/dataset.hpp"
#include "stcal/probe/sampling.hpp"

using namespace stcal;
using namespace stcal::probe;

namespace {

struct Preset {
  qsim::QubitConfig cfg;
  SamplingStrategy strategy;
};

Preset load(const std::string& name) {
  const std::string path = std::string(STCAL_CONFIG_DIR) + "/" + name + ".json";
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  Preset p{qsim::qubit_config_from_json(j), {}};
  p.strategy = strategy_from_config(j.at("probe"), p.cfg);
  return p;
}

}  // namespace

TEST(Sampling, PulsesRespectLengthAndVoltageRange) {
  for (const char* name : {"general", "specific"}) {
    const auto p = load(name);
    Rng rng(1);
    for (int k = 0; k < 5000; ++k) {
      const auto s = sample_probe_detailed(p.strategy, rng);
      ASSERT_GE(static_cast<int>(s.pulse.length()), p.strategy.length_min);
      ASSERT_LE(static_cast<int>(s.pulse.length()), p.strategy.length_max);
      EXPECT_EQ(s.pulse.dbz, p.cfg.nominal_dbz);
      for (double e : s.pulse.epsilons) {
        ASSERT_GE(e, p.cfg.eps_min);
        ASSERT_LE(e, p.cfg.eps_max);
      }
    }
  }
}

TEST(Sampling, StrategyFractionsMatchConfig) {
  const auto p = load("general");
  Rng rng(2);
  const int n = 20000;
  int counts[3] = {0, 0, 0};
  for (int k = 0; k < n; ++k) ++counts[static_cast<int>(sample_probe_detailed(p.strategy, rng).strategy)];
  const double expect[3] = {0.6, 0.1, 0.3};
  for (int i = 0; i < 3; ++i) {
    const double sd = std::sqrt(expect[i] * (1 - expect[i]) / n);
    EXPECT_NEAR(counts[i] / double(n), expect[i], 4 * sd) << i;
  }
}

TEST(Sampling, RotationWindowStretchesAccumulateTargetPhase) {
  for (const char* name : {"general", "specific"}) {
    auto p = load(name);
    p.strategy.frac_uniform = 0;
    p.strategy.frac_window = 1;
    p.strategy.frac_angle = 0;
    Rng rng(3);
    int fallbacks = 0;
    for (int k = 0; k < 2000; ++k) {
      const auto s = sample_probe_detailed(p.strategy, rng);
      if (s.fell_back) {
        ++fallbacks;
        continue;
      }
      int pos = 0;
      for (const auto& st : s.stretches) {
        EXPECT_EQ(st.start, pos);
        EXPECT_GE(st.duration, 2);
        for (int t = 0; t < st.duration; ++t) EXPECT_EQ(s.pulse.epsilons[pos + t], st.eps);
        const double phase = qsim::exchange_rate(p.strategy.assumed, st.eps) * st.duration;
        EXPECT_NEAR(phase, st.target, 1e-9 * st.target);
        EXPECT_GE(st.target, qsim::kPi / 2 - 1e-12);
        EXPECT_LE(st.target, 4 * qsim::kPi + 1e-12);
        pos += st.duration;
      }
      EXPECT_EQ(pos, static_cast<int>(s.pulse.length()));
    }
    EXPECT_LT(fallbacks, 20) << name;
  }
}

TEST(Sampling, UniformAngleIsUniformOnReachableInterval) {
  const auto p = load("general");
  const double lo = axis_angle(p.strategy.assumed, p.strategy.dbz, p.strategy.eps_max);
  const double hi = axis_angle(p.strategy.assumed, p.strategy.dbz, p.strategy.eps_min);
  ASSERT_LT(lo, hi);
  Rng rng(4);
  const int n = 20000, bins = 20;
  std::vector<int> counts(bins, 0);
  for (int k = 0; k < n; ++k) {
    const auto st = sample_uniform_angle_stretch(p.strategy, 5, rng);
    // The angle is recomputed from the realized voltage, not taken from the sampler.
    const double theta = axis_angle(p.strategy.assumed, p.strategy.dbz, st.eps);
    EXPECT_NEAR(theta, st.target, 1e-9);
    ++counts[std::min(bins - 1, static_cast<int>((theta - lo) / (hi - lo) * bins))];
  }
  double chi2 = 0;
  const double e = double(n) / bins;
  for (int c : counts) chi2 += (c - e) * (c - e) / e;
  EXPECT_LT(chi2, 43.82);  // chi-square, 19 dof, p = 0.001
}

TEST(Dataset, IndependentOfWorkerCount) {
  const auto p = load("general");
  const auto a = generate_dataset(p.strategy, p.cfg, 40, 99, 1);
  const auto b = generate_dataset(p.strategy, p.cfg, 40, 99, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(to_json(a[i]).dump(), to_json(b[i]).dump());
    EXPECT_EQ(to_json(generate_record(p.strategy, p.cfg, a[i].seed)).dump(), to_json(a[i]).dump());
  }
  const auto c = generate_dataset(p.strategy, p.cfg, 40, 100, 1);
  EXPECT_NE(to_json(a[0]).dump(), to_json(c[0]).dump());
}

TEST(Dataset, JsonlRoundTrip) {
  const auto p = load("specific");
  const auto recs = generate_dataset(p.strategy, p.cfg, 25, 5, 1);
  const auto path = std::filesystem::temp_directory_path() / "stcal_probe_roundtrip.jsonl";
  write_dataset(path, recs);
  const auto back = read_dataset(path);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].pulse.epsilons, recs[i].pulse.epsilons);
    EXPECT_EQ(back[i].stats.p_mean, recs[i].stats.p_mean);
    EXPECT_EQ(back[i].stats.p_stderr, recs[i].stats.p_stderr);
    EXPECT_EQ(back[i].strategy, recs[i].strategy);
    EXPECT_EQ(back[i].seed, recs[i].seed);
  }
  std::filesystem::remove(path);
}

TEST(Dataset, SplitIsDisjointAndProportional) {
  const auto s = split_dataset(100, {}, 1);
  EXPECT_EQ(s.train.size(), 81u);
  EXPECT_EQ(s.validation.size(), 9u);
  EXPECT_EQ(s.test.size(), 10u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 100u);
  for (std::size_t n : {3u, 7u, 1234u}) {
    const auto t = split_dataset(n, {}, 2);
    EXPECT_GE(t.validation.size(), 1u);
    EXPECT_GE(t.test.size(), 1u);
    EXPECT_EQ(t.train.size() + t.validation.size() + t.test.size(), n);
    EXPECT_LE(std::abs(double(t.train.size()) - 0.81 * n), 1.0 + (n < 10 ? 1.0 : 0.0));
  }
  EXPECT_THROW(split_dataset(2, {}, 1), ConfigError);
}

TEST(Dataset, WeightsInverseToBinDensity) {
  // bins: [0.00,0.01) x3, [0.50,0.51) x1, p = 1 lands in the last bin x2
  const std::vector<double> p = {0.001, 0.005, 0.0099, 0.505, 1.0, 0.995};
  const auto w = sample_weights(p);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_DOUBLE_EQ(w[2], 1.0);
  EXPECT_DOUBLE_EQ(w[3], 3.0);
  EXPECT_DOUBLE_EQ(w[4], 1.5);
  EXPECT_DOUBLE_EQ(w[5], 1.5);
  for (double x : w) EXPECT_GE(x, 1.0);
}
