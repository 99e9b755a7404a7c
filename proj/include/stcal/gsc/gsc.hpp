#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stcal/qsim/config.hpp"
#include "stcal/qsim/pulse.hpp"
#include "stcal/qsim/unitary.hpp"

namespace stcal::gsc {

// Gate labels index into the gate set: 0 = X_{pi/2}, 1 = Y_{pi/2}.
using Sequence = std::vector<int>;

inline constexpr int kGateCount = 2;

// All sequences of length 1..max_len over gate_count labels, shortest first and
// lexicographic within a length. Index 0 of a sequence acts first in time.
std::vector<Sequence> enumerate_sequences(int gate_count, int max_len);

// "X", "XY", ...
std::string sequence_label(const Sequence& s);

qsim::Unitary2 ideal_gate(int label);
std::vector<qsim::Unitary2> ideal_gates();

// U = G[s[n-1]] ... G[s[0]]
qsim::Unitary2 sequence_unitary(const Sequence& s, std::span<const qsim::Unitary2> gates);

// |<0| U_s |0>|^2 for each sequence.
std::vector<double> outcomes(std::span<const Sequence> sequences, std::span<const qsim::Unitary2> gates);
std::vector<double> ideal_outcomes(std::span<const Sequence> sequences);

struct SyndromeSet {
  std::vector<Sequence> sequences;
  std::vector<double> ideal;

  static SyndromeSet build(int max_len, int gate_count = kGateCount);
  std::size_t size() const { return sequences.size(); }
  // The leading sequences with length <= max_len (they come first in the ordering).
  std::size_t count_up_to(int max_len) const;
};

// One control pulse per gate label; pulses include any per-gate hold segments.
struct GateSet {
  std::vector<qsim::ControlPulse> pulses;
};

// Gate pulses in sequence order, followed by hold->final segments at hold->eps_hold.
// Throws DomainError for an empty sequence, an unknown label, or a result longer than
// l_max (l_max <= 0 disables the check).
qsim::ControlPulse concat_pulses(const GateSet& gates, const Sequence& seq, const std::optional<qsim::HoldSpec>& hold,
                                 int l_max = 0);

// (1/N) sum_i |R_i - R0_i|^exponent. If grad is non-null it receives dL/dR_i.
double gsc_loss(std::span<const double> predicted, std::span<const double> ideal, int exponent,
                std::vector<double>* grad = nullptr);

// Columns: sequence, length, ideal.
void write_syndrome_csv(const std::filesystem::path& path, const SyndromeSet& set);

}  // namespace stcal::gsc
