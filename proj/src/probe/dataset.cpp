#include "stcal/probe/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

#include "stcal/common/errors.hpp"

namespace stcal::probe {

using nlohmann::json;

namespace {

struct Generated {
  ProbeRecord record;
  bool fell_back = false;
};

Generated generate_one(const SamplingStrategy& strategy, const qsim::QubitConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  auto sample = sample_probe_detailed(strategy, rng);
  Generated g;
  g.fell_back = sample.fell_back;
  g.record.strategy = sample.strategy;
  g.record.seed = seed;
  g.record.stats = qsim::measure(sample.pulse, cfg, rng);
  g.record.pulse = std::move(sample.pulse);
  return g;
}

}  // namespace

ProbeRecord generate_record(const SamplingStrategy& strategy, const qsim::QubitConfig& cfg, std::uint64_t seed) {
  return generate_one(strategy, cfg, seed).record;
}

std::vector<ProbeRecord> generate_dataset(const SamplingStrategy& strategy, const qsim::QubitConfig& cfg,
                                          std::size_t count, std::uint64_t master_seed, int workers) {
  strategy.validate();
  std::vector<ProbeRecord> out(count);
  std::atomic<std::size_t> fallbacks{0};
  const auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < count; i += stride) {
      auto g = generate_one(strategy, cfg, mix_seed(master_seed, i));
      if (g.fell_back) ++fallbacks;
      out[i] = std::move(g.record);
    }
  };
  const std::size_t n_workers = std::max(1, workers);
  if (n_workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          work(w, n_workers);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  if (fallbacks > 0) {
    std::clog << "probe: " << fallbacks << " rotation-window pulse(s) had no feasible stretch and were "
              << "replaced by uniform random pulses\n";
  }
  return out;
}

json to_json(const ProbeRecord& r) {
  return {{"epsilons_mv", r.pulse.epsilons},
          {"dbz_rad_per_ns", r.pulse.dbz},
          {"length", r.pulse.length()},
          {"p_mean", r.stats.p_mean},
          {"p_stderr", r.stats.p_stderr},
          {"strategy", to_string(r.strategy)},
          {"seed", r.seed}};
}

ProbeRecord record_from_json(const json& j) {
  ProbeRecord r;
  try {
    r.pulse.epsilons = j.at("epsilons_mv").get<std::vector<double>>();
    r.pulse.dbz = j.at("dbz_rad_per_ns").get<double>();
    r.stats.p_mean = j.at("p_mean").get<double>();
    r.stats.p_stderr = j.at("p_stderr").get<double>();
    r.strategy = strategy_from_string(j.value("strategy", std::string("uniform_random")));
    r.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("length") && j.at("length").get<std::size_t>() != r.pulse.length()) {
      throw ConfigError("record length does not match its voltage list");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad probe record: ") + e.what());
  }
  return r;
}

void write_dataset(const std::filesystem::path& path, std::span<const ProbeRecord> records) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw ConfigError("write failed for " + path.string());
}

std::vector<ProbeRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  std::vector<ProbeRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

DatasetSplit split_dataset(std::size_t n, const SplitRatios& ratios, std::uint64_t seed) {
  if (n < 3) throw ConfigError("need at least 3 records to split a dataset");
  const double total = ratios.train + ratios.validation + ratios.test;
  if (!(ratios.train > 0 && ratios.validation > 0 && ratios.test > 0) || std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be positive and sum to 1");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng.engine());

  auto n_val = static_cast<std::size_t>(std::llround(ratios.validation * static_cast<double>(n)));
  auto n_test = static_cast<std::size_t>(std::llround(ratios.test * static_cast<double>(n)));
  n_val = std::max<std::size_t>(n_val, 1);
  n_test = std::max<std::size_t>(n_test, 1);
  while (n_val + n_test > n - 1) {
    if (n_test >= n_val && n_test > 1) --n_test;
    else --n_val;
  }
  DatasetSplit s;
  const std::size_t n_train = n - n_val - n_test;
  s.train.assign(idx.begin(), idx.begin() + n_train);
  s.validation.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
  s.test.assign(idx.begin() + n_train + n_val, idx.end());
  return s;
}

std::vector<double> sample_weights(std::span<const double> p_means) {
  constexpr int kBins = 100;
  std::vector<std::size_t> counts(kBins, 0);
  std::vector<int> bin(p_means.size());
  for (std::size_t i = 0; i < p_means.size(); ++i) {
    const double p = p_means[i];
    if (!std::isfinite(p)) throw DomainError("non-finite p_mean in sample_weights");
    bin[i] = std::clamp(static_cast<int>(std::floor(p / kWeightBinWidth)), 0, kBins - 1);
    ++counts[bin[i]];
  }
  const double max_count = static_cast<double>(*std::max_element(counts.begin(), counts.end()));
  std::vector<double> w(p_means.size());
  for (std::size_t i = 0; i < p_means.size(); ++i) w[i] = max_count / static_cast<double>(counts[bin[i]]);
  return w;
}

std::vector<double> sample_weights(std::span<const ProbeRecord> records) {
  std::vector<double> p(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) p[i] = records[i].stats.p_mean;
  return sample_weights(p);
}

}  // namespace stcal::probe
