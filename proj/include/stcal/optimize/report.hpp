#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "stcal/optimize/optimizer.hpp"

namespace stcal::optimize {

struct ReportFiles {
  std::vector<std::filesystem::path> paths;
};

// Writes candidates.csv, history.csv, initial_vs_final.csv, sorted_infidelities.csv,
// top_k.csv and histogram.csv into dir, plus pulses/candidate_NNN.json per candidate.
ReportFiles write_report(const std::filesystem::path& dir, const std::vector<GateSetCandidate>& candidates,
                         int top_k, int history_stride);

nlohmann::json gate_set_to_json(const gsc::GateSet& g);
gsc::GateSet gate_set_from_json(const nlohmann::json& j);

// Bin counts of the final mean coherent infidelity over [0, 1].
std::vector<std::size_t> infidelity_histogram(const std::vector<GateSetCandidate>& candidates, int bins);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace stcal::optimize
