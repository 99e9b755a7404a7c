#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "stcal/gsc/gsc.hpp"
#include "stcal/optimize/config.hpp"
#include "stcal/qsim/config.hpp"
#include "stcal/surrogate/network.hpp"

namespace stcal::optimize {

struct GateEval {
  double coherent = 0.0;
  double incoherent = 0.0;
  double incoherent_se = 0.0;
};

struct CandidateEval {
  GateEval gate[2];
  double theta = 0.0;  // global-Z correction from the noise-free gates
  double coherent_mean() const { return 0.5 * (gate[0].coherent + gate[1].coherent); }
  double incoherent_mean() const { return 0.5 * (gate[0].incoherent + gate[1].incoherent); }
};

struct GateSetCandidate {
  int index = 0;
  gsc::GateSet initial;
  gsc::GateSet gates;
  // Stage loss L_GSC + gamma L_std after each iteration (stage exponent and L_S).
  std::vector<double> history;
  // Surrogate L_GSC over the full syndrome set with exponent 2.
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool failed = false;
  std::optional<CandidateEval> initial_eval;
  std::optional<CandidateEval> final_eval;
};

// Per-gate layout shared by all candidates: the first `free` segments are optimized, the
// remaining hold segments stay at the hold voltage.
struct GateLayout {
  int free = 12;
  int hold = 0;
  double eps_hold = 0.0;
  int length() const { return free + hold; }
};

GateLayout gate_layout(const OptimizeConfig& cfg, const qsim::QubitConfig& qubit);

// Uniform random voltages on [eps_min, eps_max] for the free segments.
gsc::GateSet random_gate_set(const GateLayout& layout, const qsim::QubitConfig& qubit, Rng& rng);

// Surrogate L_GSC (exponent 2, all sequences) of several gate sets.
std::vector<double> surrogate_gsc_loss(const surrogate::Network<float>& net, const std::vector<gsc::GateSet>& sets,
                                       const gsc::SyndromeSet& syndromes, const qsim::QubitConfig& qubit);

using ProgressCallback = std::function<void(int iteration, const Stage& stage, double median_loss)>;

// Algorithm: batched SGD of K gate sets through the frozen surrogate. Candidate n starts
// from `init[n]` if given, otherwise from random voltages drawn from its own substream.
std::vector<GateSetCandidate> optimize_gatesets(const surrogate::Model& model, const gsc::SyndromeSet& syndromes,
                                                const OptimizeConfig& cfg, const qsim::QubitConfig& qubit,
                                                const std::vector<gsc::GateSet>& init = {},
                                                const ProgressCallback& progress = {});

// Indices of the k lowest final losses; ties broken by index. Failed candidates rank last.
std::vector<int> select_top(const std::vector<GateSetCandidate>& candidates, int k);

}  // namespace stcal::optimize
