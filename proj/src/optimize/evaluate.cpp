#include "stcal/optimize/evaluate.hpp"

#include <cmath>

#include "stcal/common/errors.hpp"
#include "stcal/qsim/simulator.hpp"

namespace stcal::optimize {

CandidateEval evaluate_gate_set(const gsc::GateSet& gates, const qsim::QubitConfig& qubit, int n_noise,
                                std::uint64_t seed) {
  if (gates.pulses.size() != 2) throw DomainError("gate set must hold exactly two pulses");
  if (n_noise < 1) throw ConfigError("n_noise must be >= 1");
  const auto ideal = gsc::ideal_gates();
  const auto quiet = qsim::noiseless_realization(qubit);
  const qsim::Unitary2 ux = qsim::propagate(gates.pulses[0], qubit, quiet);
  const qsim::Unitary2 uy = qsim::propagate(gates.pulses[1], qubit, quiet);
  const auto gz = qsim::global_z_correct(ux, uy);

  CandidateEval ev;
  ev.theta = gz.theta;
  ev.gate[0].coherent = 1.0 - qsim::entanglement_fidelity(ideal[0], gz.x_gate);
  ev.gate[1].coherent = 1.0 - qsim::entanglement_fidelity(ideal[1], gz.y_gate);
  const qsim::Unitary2 rz_p = qsim::rz(gz.theta);
  const qsim::Unitary2 rz_m = qsim::rz(-gz.theta);
  for (int g = 0; g < 2; ++g) {
    auto& out = ev.gate[g];
    if (!qubit.noise.enabled) {
      out.incoherent = out.coherent;
      continue;
    }
    const auto& pulse = gates.pulses[g];
    double sum = 0.0, sum2 = 0.0;
    for (int n = 0; n < n_noise; ++n) {
      Rng rng = Rng::derive(seed, {static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(n)});
      const auto real = qsim::sample_realization(qubit, static_cast<int>(pulse.length()), rng);
      const qsim::Unitary2 u = rz_p * qsim::propagate(pulse, qubit, real) * rz_m;
      const double inf = 1.0 - qsim::entanglement_fidelity(ideal[g], u);
      sum += inf;
      sum2 += inf * inf;
    }
    out.incoherent = sum / n_noise;
    const double var = std::max(0.0, sum2 / n_noise - out.incoherent * out.incoherent);
    out.incoherent_se = std::sqrt(var / n_noise);
  }
  return ev;
}

void evaluate_candidates(std::vector<GateSetCandidate>& candidates, const qsim::QubitConfig& qubit, int n_noise,
                         std::uint64_t seed) {
  for (auto& c : candidates) {
    const auto idx = static_cast<std::uint64_t>(c.index);
    c.initial_eval = evaluate_gate_set(c.initial, qubit, n_noise, Rng::derive(seed, {idx, 0}).next_key());
    try {
      c.final_eval = evaluate_gate_set(c.gates, qubit, n_noise, Rng::derive(seed, {idx, 1}).next_key());
    } catch (const NumericError&) {
      c.failed = true;
      c.final_eval.reset();
    }
  }
}

}  // namespace stcal::optimize
