#include "stcal/gsc/gsc.hpp"

#include <cmath>
#include <fstream>

#include "stcal/common/errors.hpp"
#include "stcal/qsim/units.hpp"

namespace stcal::gsc {

std::vector<Sequence> enumerate_sequences(int gate_count, int max_len) {
  if (gate_count < 1 || max_len < 1) throw ConfigError("enumerate_sequences needs gate_count >= 1 and max_len >= 1");
  std::vector<Sequence> out;
  for (int len = 1; len <= max_len; ++len) {
    Sequence s(len, 0);
    while (true) {
      out.push_back(s);
      // Odometer increment, last position fastest.
      int pos = len - 1;
      while (pos >= 0 && ++s[pos] == gate_count) s[pos--] = 0;
      if (pos < 0) break;
    }
  }
  return out;
}

std::string sequence_label(const Sequence& s) {
  static const char* names = "XYZABCDEFGHIJKLMNOPQRSTUVW";
  std::string out;
  for (int g : s) out += (g >= 0 && g < 26) ? names[g] : '?';
  return out;
}

qsim::Unitary2 ideal_gate(int label) {
  switch (label) {
    case 0: return qsim::rx(qsim::kPi / 2);
    case 1: return qsim::ry(qsim::kPi / 2);
  }
  throw DomainError("no ideal gate for label " + std::to_string(label));
}

std::vector<qsim::Unitary2> ideal_gates() { return {ideal_gate(0), ideal_gate(1)}; }

qsim::Unitary2 sequence_unitary(const Sequence& s, std::span<const qsim::Unitary2> gates) {
  auto u = qsim::Unitary2::identity();
  for (int g : s) {
    if (g < 0 || g >= static_cast<int>(gates.size())) throw DomainError("sequence label out of range");
    u = gates[g] * u;
  }
  return u;
}

std::vector<double> outcomes(std::span<const Sequence> sequences, std::span<const qsim::Unitary2> gates) {
  std::vector<double> r;
  r.reserve(sequences.size());
  for (const auto& s : sequences) r.push_back(sequence_unitary(s, gates).survival_probability());
  return r;
}

std::vector<double> ideal_outcomes(std::span<const Sequence> sequences) {
  const auto g = ideal_gates();
  return outcomes(sequences, g);
}

SyndromeSet SyndromeSet::build(int max_len, int gate_count) {
  SyndromeSet s;
  s.sequences = enumerate_sequences(gate_count, max_len);
  if (gate_count == kGateCount) {
    s.ideal = ideal_outcomes(s.sequences);
  } else {
    throw ConfigError("ideal outcomes are defined for the two-gate set only");
  }
  return s;
}

std::size_t SyndromeSet::count_up_to(int max_len) const {
  std::size_t n = 0;
  while (n < sequences.size() && static_cast<int>(sequences[n].size()) <= max_len) ++n;
  return n;
}

qsim::ControlPulse concat_pulses(const GateSet& gates, const Sequence& seq, const std::optional<qsim::HoldSpec>& hold,
                                 int l_max) {
  if (seq.empty()) throw DomainError("cannot concatenate an empty sequence");
  qsim::ControlPulse out;
  for (int g : seq) {
    if (g < 0 || g >= static_cast<int>(gates.pulses.size())) throw DomainError("sequence label out of range");
    const auto& p = gates.pulses[g];
    if (out.epsilons.empty()) out.dbz = p.dbz;
    out.epsilons.insert(out.epsilons.end(), p.epsilons.begin(), p.epsilons.end());
  }
  if (hold) out.epsilons.insert(out.epsilons.end(), hold->final, hold->eps_hold);
  if (l_max > 0 && out.length() > static_cast<std::size_t>(l_max)) {
    throw DomainError("sequence " + sequence_label(seq) + " needs " + std::to_string(out.length()) +
                      " segments, more than the surrogate capacity " + std::to_string(l_max));
  }
  return out;
}

double gsc_loss(std::span<const double> predicted, std::span<const double> ideal, int exponent, std::vector<double>* grad) {
  if (predicted.size() != ideal.size() || predicted.empty()) throw DomainError("gsc_loss: prediction count mismatch");
  if (exponent < 1) throw DomainError("gsc_loss: exponent must be >= 1");
  const double n = static_cast<double>(predicted.size());
  double loss = 0;
  if (grad) grad->assign(predicted.size(), 0.0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - ideal[i];
    loss += std::pow(std::abs(d), exponent);
    if (grad) (*grad)[i] = exponent * std::pow(std::abs(d), exponent - 1) * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) / n;
  }
  return loss / n;
}

void write_syndrome_csv(const std::filesystem::path& path, const SyndromeSet& set) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.precision(17);
  out << "sequence,length,ideal\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << sequence_label(set.sequences[i]) << ',' << set.sequences[i].size() << ',' << set.ideal[i] << '\n';
  }
}

}  // namespace stcal::gsc
