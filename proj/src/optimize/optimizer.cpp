#include "stcal/optimize/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stcal/common/errors.hpp"
#include "stcal/common/rng.hpp"

namespace stcal::optimize {

using surrogate::Mat;
using surrogate::Mode;
using surrogate::Network;

GateLayout gate_layout(const OptimizeConfig& cfg, const qsim::QubitConfig& qubit) {
  GateLayout g;
  g.free = cfg.gate_segments;
  if (qubit.hold) {
    g.hold = qubit.hold->per_gate;
    g.eps_hold = qubit.hold->eps_hold;
  }
  return g;
}

gsc::GateSet random_gate_set(const GateLayout& layout, const qsim::QubitConfig& qubit, Rng& rng) {
  gsc::GateSet set;
  for (int g = 0; g < gsc::kGateCount; ++g) {
    qsim::ControlPulse p;
    p.dbz = qubit.nominal_dbz;
    for (int t = 0; t < layout.free; ++t) p.epsilons.push_back(rng.uniform(qubit.eps_min, qubit.eps_max));
    p.epsilons.insert(p.epsilons.end(), layout.hold, layout.eps_hold);
    set.pulses.push_back(std::move(p));
  }
  return set;
}

namespace {

// Output of one batched surrogate pass over candidates x sequences.
struct Pass {
  std::vector<double> loss;                            // per candidate
  std::vector<std::vector<std::vector<double>>> grad;  // [candidate][gate][segment], d/d(scaled eps)
};

class Evaluator {
 public:
  Evaluator(const Network<float>& net, const gsc::SyndromeSet& syn, const qsim::QubitConfig& qubit)
      : net_(net), syn_(syn), hold_(qubit.hold) {}

  // Loss (and optionally gradients) for the listed gate sets on the first n_seq sequences.
  // Candidates go through the network a few at a time; small batches keep the tape in cache.
  Pass run(const std::vector<const gsc::GateSet*>& sets, std::size_t n_seq, int exponent, double gamma, bool want_grad) const {
    constexpr std::size_t kColumns = 64;
    const std::size_t chunk = std::max<std::size_t>(1, kColumns / n_seq);
    Pass pass;
    for (std::size_t start = 0; start < sets.size(); start += chunk) {
      const std::vector<const gsc::GateSet*> part(sets.begin() + start, sets.begin() + std::min(sets.size(), start + chunk));
      Pass p = run_chunk(part, n_seq, exponent, gamma, want_grad);
      pass.loss.insert(pass.loss.end(), p.loss.begin(), p.loss.end());
      for (auto& g : p.grad) pass.grad.push_back(std::move(g));
    }
    return pass;
  }

 private:
  Pass run_chunk(const std::vector<const gsc::GateSet*>& sets, std::size_t n_seq, int exponent, double gamma,
                 bool want_grad) const {
    const int K = static_cast<int>(sets.size());
    const int B = K * static_cast<int>(n_seq);
    std::vector<qsim::ControlPulse> pulses;
    pulses.reserve(B);
    for (const auto* s : sets) {
      for (std::size_t i = 0; i < n_seq; ++i) {
        pulses.push_back(gsc::concat_pulses(*s, syn_.sequences[i], hold_, net_.normalization().l_max));
      }
    }
    std::vector<const qsim::ControlPulse*> ptrs(pulses.size());
    for (std::size_t i = 0; i < pulses.size(); ++i) ptrs[i] = &pulses[i];
    const int pad = net_.spec().pad;
    const Mat<float> x = surrogate::batch_input<float>(ptrs, net_.normalization(), pad);
    Network<float>::Tape tape;
    const Mat<float> out = net_.forward(x, B, Mode::Inference, want_grad ? &tape : nullptr);

    Pass pass;
    pass.loss.resize(K);
    Mat<float> up(2, B);
    const std::span<const double> ideal(syn_.ideal.data(), n_seq);
    std::vector<double> r(n_seq), g;
    for (int n = 0; n < K; ++n) {
      double lstd = 0;
      for (std::size_t i = 0; i < n_seq; ++i) {
        const int col = n * static_cast<int>(n_seq) + static_cast<int>(i);
        r[i] = out(0, col);
        lstd += static_cast<double>(out(1, col)) * out(1, col);
      }
      const double lgsc = gsc::gsc_loss(r, ideal, exponent, &g);
      pass.loss[n] = lgsc + gamma * lstd / static_cast<double>(n_seq);
      for (std::size_t i = 0; i < n_seq; ++i) {
        const int col = n * static_cast<int>(n_seq) + static_cast<int>(i);
        up(0, col) = static_cast<float>(g[i]);
        up(1, col) = static_cast<float>(gamma * 2.0 * out(1, col) / static_cast<double>(n_seq));
      }
    }
    if (!want_grad) return pass;

    Mat<float> dx;
    net_.backward(tape, up, nullptr, &dx);
    pass.grad.resize(K);
    for (int n = 0; n < K; ++n) {
      auto& gg = pass.grad[n];
      gg.resize(sets[n]->pulses.size());
      for (std::size_t k = 0; k < gg.size(); ++k) gg[k].assign(sets[n]->pulses[k].length(), 0.0);
      for (std::size_t i = 0; i < n_seq; ++i) {
        const int col = n * static_cast<int>(n_seq) + static_cast<int>(i);
        int offset = 0;
        for (int label : syn_.sequences[i]) {
          const int len = static_cast<int>(sets[n]->pulses[label].length());
          for (int t = 0; t < len; ++t) gg[label][t] += dx(0, static_cast<Eigen::Index>(pad + offset + t) * B + col);
          offset += len;
        }
      }
    }
    return pass;
  }

  const Network<float>& net_;
  const gsc::SyndromeSet& syn_;
  std::optional<qsim::HoldSpec> hold_;
};

}  // namespace

std::vector<double> surrogate_gsc_loss(const Network<float>& net, const std::vector<gsc::GateSet>& sets,
                                       const gsc::SyndromeSet& syndromes, const qsim::QubitConfig& qubit) {
  const Evaluator ev(net, syndromes, qubit);
  std::vector<double> out;
  constexpr std::size_t kChunk = 32;
  for (std::size_t start = 0; start < sets.size(); start += kChunk) {
    std::vector<const gsc::GateSet*> ptrs;
    for (std::size_t i = start; i < std::min(sets.size(), start + kChunk); ++i) ptrs.push_back(&sets[i]);
    const auto pass = ev.run(ptrs, syndromes.size(), 2, 0.0, false);
    out.insert(out.end(), pass.loss.begin(), pass.loss.end());
  }
  return out;
}

std::vector<GateSetCandidate> optimize_gatesets(const surrogate::Model& model, const gsc::SyndromeSet& syndromes,
                                                const OptimizeConfig& cfg, const qsim::QubitConfig& qubit,
                                                const std::vector<gsc::GateSet>& init, const ProgressCallback& progress) {
  cfg.validate();
  const Network<float> net(model);
  const GateLayout layout = gate_layout(cfg, qubit);
  const int K = cfg.n_gatesets;
  if (!init.empty() && static_cast<int>(init.size()) != K) throw ConfigError("need one initial gate set per candidate");

  std::vector<GateSetCandidate> cand(K);
  for (int n = 0; n < K; ++n) {
    cand[n].index = n;
    if (init.empty()) {
      Rng rng = Rng::derive(cfg.seed, {static_cast<std::uint64_t>(n)});
      cand[n].initial = random_gate_set(layout, qubit, rng);
    } else {
      cand[n].initial = init[n];
    }
    cand[n].gates = cand[n].initial;
    cand[n].history.reserve(cfg.total_iterations());
  }
  for (int n = 0; n < K; ++n) {
    try {
      cand[n].initial_loss = surrogate_gsc_loss(net, {cand[n].initial}, syndromes, qubit)[0];
    } catch (const NumericError&) {
      cand[n].initial_loss = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(cand[n].initial_loss)) cand[n].failed = true;
  }

  const Evaluator ev(net, syndromes, qubit);
  const double scale = model.norm.eps_scale;
  // Voltage change per unit of (lr * gradient w.r.t. the scaled channel).
  const double step_factor = cfg.units == StepUnits::Normalized ? 1.0 / scale : scale;

  int iteration = 0;
  for (const auto& stage : cfg.stages) {
    const std::size_t n_seq = syndromes.count_up_to(stage.max_len);
    if (n_seq == 0) throw ConfigError("stage selects no syndrome sequences");
    for (int it = 0; it < stage.iterations; ++it, ++iteration) {
      std::vector<int> active;
      for (int n = 0; n < K; ++n) {
        if (!cand[n].failed) active.push_back(n);
      }
      if (active.empty()) break;
      std::vector<const gsc::GateSet*> sets;
      for (int n : active) sets.push_back(&cand[n].gates);

      Pass pass;
      try {
        pass = ev.run(sets, n_seq, stage.exponent, stage.gamma, true);
      } catch (const NumericError&) {
        // Find the offending candidates one at a time; the rest continue next iteration.
        for (int n : active) {
          try {
            ev.run({&cand[n].gates}, n_seq, stage.exponent, stage.gamma, false);
          } catch (const NumericError&) {
            cand[n].failed = true;
          }
        }
        --it;
        --iteration;
        continue;
      }

      std::vector<std::vector<std::vector<double>>> grad(K);
      for (std::size_t a = 0; a < active.size(); ++a) {
        const int n = active[a];
        if (!std::isfinite(pass.loss[a])) {
          cand[n].failed = true;
          continue;
        }
        cand[n].history.push_back(pass.loss[a]);
        grad[n] = std::move(pass.grad[a]);
      }

      // Mix each gradient with its mini-batch mean, batches of kb consecutive candidates.
      for (int b0 = 0; b0 < K; b0 += stage.kb) {
        std::vector<int> members;
        for (int n = b0; n < b0 + stage.kb; ++n) {
          if (!cand[n].failed && !grad[n].empty()) members.push_back(n);
        }
        if (members.empty()) continue;
        if (stage.delta > 0 && members.size() > 1) {
          auto mean = grad[members[0]];
          for (auto& gate : mean) std::fill(gate.begin(), gate.end(), 0.0);
          for (int n : members)
            for (std::size_t g = 0; g < mean.size(); ++g)
              for (std::size_t t = 0; t < mean[g].size(); ++t) mean[g][t] += grad[n][g][t] / members.size();
          for (int n : members)
            for (std::size_t g = 0; g < mean.size(); ++g)
              for (std::size_t t = 0; t < mean[g].size(); ++t)
                grad[n][g][t] = (1 - stage.delta) * grad[n][g][t] + stage.delta * mean[g][t];
        }
        for (int n : members) {
          for (std::size_t g = 0; g < cand[n].gates.pulses.size(); ++g) {
            auto& eps = cand[n].gates.pulses[g].epsilons;
            for (int t = 0; t < layout.free; ++t) {
              eps[t] = std::clamp(eps[t] - stage.lr * step_factor * grad[n][g][t], qubit.eps_min, qubit.eps_max);
            }
          }
        }
      }
      if (progress) {
        std::vector<double> last;
        for (int n : active) {
          if (!cand[n].history.empty()) last.push_back(cand[n].history.back());
        }
        double med = std::numeric_limits<double>::quiet_NaN();
        if (!last.empty()) {
          std::nth_element(last.begin(), last.begin() + last.size() / 2, last.end());
          med = last[last.size() / 2];
        }
        progress(iteration, stage, med);
      }
    }
  }

  std::vector<double> lf(K, std::numeric_limits<double>::infinity());
  for (int n = 0; n < K; ++n) {
    if (cand[n].failed) continue;
    try {
      lf[n] = surrogate_gsc_loss(net, {cand[n].gates}, syndromes, qubit)[0];
    } catch (const NumericError&) {
      cand[n].failed = true;
    }
  }
  for (int n = 0; n < K; ++n) cand[n].final_loss = lf[n];
  return cand;
}

std::vector<int> select_top(const std::vector<GateSetCandidate>& candidates, int k) {
  if (k < 0 || k > static_cast<int>(candidates.size())) throw ConfigError("select_top: k out of range");
  std::vector<int> idx(candidates.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const auto& ca = candidates[a];
    const auto& cb = candidates[b];
    if (ca.failed != cb.failed) return !ca.failed;
    if (ca.final_loss != cb.final_loss) return ca.final_loss < cb.final_loss;
    return ca.index < cb.index;
  });
  idx.resize(k);
  return idx;
}

}  // namespace stcal::optimize
