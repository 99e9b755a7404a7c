#pragma once

#include "stcal/gsc/gsc.hpp"
#include "stcal/optimize/optimizer.hpp"
#include "stcal/qsim/config.hpp"

namespace stcal::optimize {

// Ground-truth scoring of a gate set: both gates are propagated without noise, the global-Z
// gauge is removed jointly, and coherent infidelity is 1 - F against X_{pi/2} / Y_{pi/2}.
// Incoherent infidelity averages n_noise Monte Carlo draws, each corrected with the
// noise-free theta. With noise disabled it equals the coherent value.
CandidateEval evaluate_gate_set(const gsc::GateSet& gates, const qsim::QubitConfig& qubit, int n_noise,
                                std::uint64_t seed);

// Fills initial_eval and final_eval of every candidate.
void evaluate_candidates(std::vector<GateSetCandidate>& candidates, const qsim::QubitConfig& qubit, int n_noise,
                         std::uint64_t seed);

}  // namespace stcal::optimize
