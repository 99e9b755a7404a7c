#include "stcal/optimize/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "stcal/common/errors.hpp"

namespace stcal::optimize {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

double coherent_of(const std::optional<CandidateEval>& e) { return e ? e->coherent_mean() : nan(); }
double incoherent_of(const std::optional<CandidateEval>& e) { return e ? e->incoherent_mean() : nan(); }

std::ofstream open(const fs::path& p, ReportFiles& files) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  files.paths.push_back(p);
  return out;
}

}  // namespace

nlohmann::json gate_set_to_json(const gsc::GateSet& g) {
  nlohmann::json gates = nlohmann::json::array();
  for (std::size_t k = 0; k < g.pulses.size(); ++k) {
    const auto& p = g.pulses[k];
    gates.push_back({{"label", gsc::sequence_label({static_cast<int>(k)})},
                     {"epsilons_mv", p.epsilons},
                     {"dbz_rad_per_ns", p.dbz},
                     {"length", p.length()}});
  }
  return {{"gates", gates}};
}

gsc::GateSet gate_set_from_json(const nlohmann::json& j) {
  gsc::GateSet g;
  try {
    for (const auto& e : j.at("gates")) {
      qsim::ControlPulse p;
      p.epsilons = e.at("epsilons_mv").get<std::vector<double>>();
      p.dbz = e.at("dbz_rad_per_ns").get<double>();
      if (e.contains("length") && e.at("length").get<std::size_t>() != p.length())
        throw ConfigError("gate length does not match its voltages");
      p.validate();
      g.pulses.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("bad gate set JSON: ") + ex.what());
  }
  return g;
}

std::vector<std::size_t> infidelity_histogram(const std::vector<GateSetCandidate>& candidates, int bins) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  std::vector<std::size_t> h(bins, 0);
  for (const auto& c : candidates) {
    const double v = coherent_of(c.final_eval);
    // Unevaluated or failed candidates count as infidelity 1.
    const double x = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 1.0;
    h[std::min(bins - 1, static_cast<int>(x * bins))]++;
  }
  return h;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("pearson needs two equal series of length >= 2");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

ReportFiles write_report(const fs::path& dir, const std::vector<GateSetCandidate>& candidates, int top_k,
                         int history_stride) {
  if (history_stride < 1) throw ConfigError("history_stride must be >= 1");
  fs::create_directories(dir / "pulses");
  ReportFiles files;

  {
    auto out = open(dir / "candidates.csv", files);
    out << "index,failed,initial_loss,final_loss,initial_coherent,final_coherent_x,final_coherent_y,"
           "final_coherent,final_incoherent_x,final_incoherent_y,final_incoherent,final_incoherent_se,theta\n";
    for (const auto& c : candidates) {
      const auto& f = c.final_eval;
      out << c.index << ',' << (c.failed ? 1 : 0) << ',' << num(c.initial_loss) << ',' << num(c.final_loss) << ','
          << num(coherent_of(c.initial_eval)) << ',' << num(f ? f->gate[0].coherent : nan()) << ','
          << num(f ? f->gate[1].coherent : nan()) << ',' << num(coherent_of(f)) << ','
          << num(f ? f->gate[0].incoherent : nan()) << ',' << num(f ? f->gate[1].incoherent : nan()) << ','
          << num(incoherent_of(f)) << ','
          << num(f ? std::hypot(f->gate[0].incoherent_se, f->gate[1].incoherent_se) / 2 : nan()) << ','
          << num(f ? f->theta : nan()) << '\n';
    }
  }
  {
    auto out = open(dir / "history.csv", files);
    out << "candidate,iteration,loss\n";
    for (const auto& c : candidates) {
      const auto n = c.history.size();
      for (std::size_t i = 0; i < n; ++i) {
        if (i % history_stride == 0 || i + 1 == n) out << c.index << ',' << i << ',' << num(c.history[i]) << '\n';
      }
    }
  }
  {
    auto out = open(dir / "initial_vs_final.csv", files);
    out << "index,initial_coherent,final_coherent,initial_incoherent,final_incoherent\n";
    for (const auto& c : candidates) {
      out << c.index << ',' << num(coherent_of(c.initial_eval)) << ',' << num(coherent_of(c.final_eval)) << ','
          << num(incoherent_of(c.initial_eval)) << ',' << num(incoherent_of(c.final_eval)) << '\n';
    }
  }
  {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t i) {
      const double v = coherent_of(candidates[i].final_eval);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    auto out = open(dir / "sorted_infidelities.csv", files);
    out << "rank,index,final_coherent,final_incoherent\n";
    for (std::size_t r = 0; r < order.size(); ++r) {
      const auto& c = candidates[order[r]];
      out << r << ',' << c.index << ',' << num(coherent_of(c.final_eval)) << ','
          << num(incoherent_of(c.final_eval)) << '\n';
    }
  }
  {
    auto out = open(dir / "top_k.csv", files);
    out << "rank,index,final_loss,gate,coherent,incoherent,incoherent_se\n";
    const int k = std::min<int>(top_k, static_cast<int>(candidates.size()));
    const auto top = select_top(candidates, k);
    for (int r = 0; r < k; ++r) {
      const auto& c = candidates[top[r]];
      for (int g = 0; g < 2; ++g) {
        const auto& f = c.final_eval;
        out << r << ',' << c.index << ',' << num(c.final_loss) << ',' << gsc::sequence_label({g}) << ','
            << num(f ? f->gate[g].coherent : nan()) << ',' << num(f ? f->gate[g].incoherent : nan()) << ','
            << num(f ? f->gate[g].incoherent_se : nan()) << '\n';
      }
    }
  }
  {
    constexpr int kBins = 20;
    const auto h = infidelity_histogram(candidates, kBins);
    auto out = open(dir / "histogram.csv", files);
    out << "bin_low,bin_high,count\n";
    for (int b = 0; b < kBins; ++b) out << num(double(b) / kBins) << ',' << num(double(b + 1) / kBins) << ',' << h[b] << '\n';
  }
  for (const auto& c : candidates) {
    char name[32];
    std::snprintf(name, sizeof name, "candidate_%03d.json", c.index);
    nlohmann::json j = gate_set_to_json(c.gates);
    j["index"] = c.index;
    j["failed"] = c.failed;
    j["initial_loss"] = c.initial_loss;
    j["final_loss"] = std::isfinite(c.final_loss) ? nlohmann::json(c.final_loss) : nlohmann::json(nullptr);
    if (c.final_eval) {
      j["theta"] = c.final_eval->theta;
      j["coherent_infidelity"] = {c.final_eval->gate[0].coherent, c.final_eval->gate[1].coherent};
      j["incoherent_infidelity"] = {c.final_eval->gate[0].incoherent, c.final_eval->gate[1].incoherent};
    }
    const fs::path p = dir / "pulses" / name;
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << j.dump(1) << '\n';
    files.paths.push_back(p);
  }
  return files;
}

}  // namespace stcal::optimize
