#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "stcal/common/errors.hpp"
#include "stcal/common/rng.hpp"
#include "stcal/optimize/config.hpp"
#include "stcal/optimize/evaluate.hpp"
#include "stcal/optimize/optimizer.hpp"
#include "stcal/optimize/report.hpp"
#include "stcal/surrogate/encode.hpp"
#include "stcal/surrogate/network.hpp"
#include "support/pulse_solver.hpp"

using namespace stcal;
using namespace stcal::optimize;
namespace fs = std::filesystem;

namespace {

const double kPiD = std::acos(-1.0);

qsim::QubitConfig load(const std::string& name) {
  return qsim::load_qubit_config(std::string(STCAL_CONFIG_DIR) + "/" + name + ".json");
}

surrogate::Model tiny_model(const qsim::QubitConfig& cfg, int l_max, std::uint64_t seed) {
  return surrogate::init_model(surrogate::NetworkSpec::tiny(), surrogate::default_normalization(cfg, l_max), seed);
}

OptimizeConfig small_config(int k, int iterations, double lr) {
  OptimizeConfig c;
  c.n_gatesets = k;
  c.top_k = 1;
  c.seed = 42;
  c.stages = {Stage{iterations, lr, 3, 2, 1, 0.0, 0.0}};
  return c;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

GateSetCandidate fake_candidate(int index, double loss, double coherent) {
  GateSetCandidate c;
  c.index = index;
  c.final_loss = loss;
  CandidateEval e;
  e.gate[0].coherent = e.gate[1].coherent = coherent;
  e.gate[0].incoherent = e.gate[1].incoherent = coherent + 0.01;
  c.final_eval = e;
  c.initial_eval = e;
  c.history = {1.0, 0.5, loss};
  qsim::ControlPulse p;
  p.epsilons = {0.1, 0.2};
  p.dbz = 0.3;
  c.gates.pulses = {p, p};
  c.initial = c.gates;
  return c;
}

}  // namespace

TEST(OptimizeConfig, StagesInheritUnspecifiedFields) {
  const auto c = load_optimize_config(std::string(STCAL_CONFIG_DIR) + "/optimize_paper.json");
  ASSERT_EQ(c.stages.size(), 6u);
  EXPECT_EQ(c.total_iterations(), 77000);
  EXPECT_EQ(c.stages[1].max_len, 4);
  EXPECT_EQ(c.stages[1].exponent, 4);
  EXPECT_EQ(c.stages[1].lr, 0.5);
  EXPECT_EQ(c.stages[2].max_len, 4);
  EXPECT_EQ(c.stages[2].kb, 8);
  EXPECT_EQ(c.stages[3].kb, 8);
  EXPECT_EQ(c.stages[3].delta, 0.05);
  EXPECT_EQ(c.stages[3].exponent, 2);
  EXPECT_EQ(c.stages[4].gamma, 2.0);
  EXPECT_EQ(c.stages[5].gamma, 2.0);
  EXPECT_EQ(c.stages[5].lr, 0.03);

  const auto desk = load_optimize_config(std::string(STCAL_CONFIG_DIR) + "/optimize_desk.json");
  EXPECT_EQ(desk.n_gatesets, 32);
  EXPECT_EQ(desk.total_iterations(), 7700);
  // Resolved JSON round-trips.
  const auto again = optimize_config_from_json(to_json(desk));
  EXPECT_EQ(to_json(again), to_json(desk));
}

TEST(OptimizeConfig, RejectsInvalid) {
  auto c = small_config(4, 1, 0.1);
  c.stages[0].kb = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c.stages[0].kb = 2;
  c.stages[0].exponent = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c.stages[0].exponent = 4;
  c.stages[0].delta = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c.stages[0].delta = 0.5;
  c.stages[0].gamma = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c.stages[0].gamma = 0;
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(optimize_config_from_json(nlohmann::json{{"stages", {{{"lr", 0.1}}}}}), ConfigError);
  EXPECT_THROW(optimize_config_from_json(nlohmann::json{{"step_units", "volts"}, {"stages", {{{"iterations", 1}}}}}),
               ConfigError);
}

TEST(Optimize, StationaryPointLeavesPulsesUnchanged) {
  const auto qubit = load("general");
  const auto model = tiny_model(qubit, 48, 3);
  const surrogate::Network<float> net(model);
  auto cfg = small_config(4, 5, 0.5);
  cfg.stages[0].max_len = 4;
  cfg.stages[0].kb = 2;
  cfg.stages[0].delta = 0.3;

  Rng rng(9);
  const auto layout = gate_layout(cfg, qubit);
  const auto start = random_gate_set(layout, qubit, rng);
  auto syn = gsc::SyndromeSet::build(4);
  // Make the starting gates match every syndrome target as seen by the surrogate.
  std::vector<qsim::ControlPulse> pulses;
  for (const auto& s : syn.sequences) pulses.push_back(gsc::concat_pulses(start, s, qubit.hold));
  std::vector<const qsim::ControlPulse*> ptrs;
  for (const auto& p : pulses) ptrs.push_back(&p);
  const auto pred = surrogate::predict(net, ptrs);
  for (std::size_t i = 0; i < syn.size(); ++i) syn.ideal[i] = pred(0, static_cast<Eigen::Index>(i));

  const std::vector<gsc::GateSet> init(4, start);
  const auto out = optimize_gatesets(model, syn, cfg, qubit, init);
  for (const auto& c : out) {
    EXPECT_FALSE(c.failed);
    EXPECT_EQ(c.initial_loss, 0.0);
    for (int g = 0; g < 2; ++g) EXPECT_EQ(c.gates.pulses[g].epsilons, start.pulses[g].epsilons);
    ASSERT_EQ(c.history.size(), 5u);
    for (double h : c.history) EXPECT_EQ(h, 0.0);
  }
}

TEST(Optimize, NoMixingDecouplesCandidates) {
  const auto qubit = load("general");
  const auto model = tiny_model(qubit, 48, 4);
  const auto syn = gsc::SyndromeSet::build(4);
  auto cfg = small_config(4, 6, 0.2);
  const auto joint = optimize_gatesets(model, syn, cfg, qubit);
  Rng rng(77);
  for (int n = 0; n < 4; ++n) {
    // Same slot, different neighbours: bit-identical trajectory.
    std::vector<gsc::GateSet> init;
    for (int m = 0; m < 4; ++m)
      init.push_back(m == n ? joint[n].initial : random_gate_set(gate_layout(cfg, qubit), qubit, rng));
    const auto other = optimize_gatesets(model, syn, cfg, qubit, init);
    for (int g = 0; g < 2; ++g) EXPECT_EQ(other[n].gates.pulses[g].epsilons, joint[n].gates.pulses[g].epsilons) << n;
    EXPECT_EQ(other[n].history, joint[n].history);

    // Run alone: float batch width may change the last bits only.
    auto single = cfg;
    single.n_gatesets = 1;
    const auto alone = optimize_gatesets(model, syn, single, qubit, {joint[n].initial});
    for (int g = 0; g < 2; ++g)
      for (int t = 0; t < 12; ++t)
        EXPECT_NEAR(alone[0].gates.pulses[g].epsilons[t], joint[n].gates.pulses[g].epsilons[t], 1e-5);
  }
}

TEST(Optimize, MixingCouplesCandidatesWithinBatchOnly) {
  const auto qubit = load("general");
  const auto model = tiny_model(qubit, 48, 4);
  const auto syn = gsc::SyndromeSet::build(4);
  auto cfg = small_config(4, 3, 0.2);
  cfg.stages[0].kb = 2;
  cfg.stages[0].delta = 0.5;
  const auto base = optimize_gatesets(model, syn, cfg, qubit);
  // Perturb candidate 3: candidate 2 (same batch) must change, candidates 0 and 1 must not.
  std::vector<gsc::GateSet> init;
  for (const auto& c : base) init.push_back(c.initial);
  init[3].pulses[0].epsilons[0] += 0.3;
  const auto moved = optimize_gatesets(model, syn, cfg, qubit, init);
  EXPECT_EQ(moved[0].gates.pulses[0].epsilons, base[0].gates.pulses[0].epsilons);
  EXPECT_EQ(moved[1].gates.pulses[1].epsilons, base[1].gates.pulses[1].epsilons);
  EXPECT_NE(moved[2].gates.pulses[0].epsilons, base[2].gates.pulses[0].epsilons);
}

TEST(Optimize, StepFollowsSurrogateGradient) {
  // One tiny millivolt step: the update direction must be the negative loss gradient,
  // checked against a finite difference of the surrogate loss along that direction.
  const auto qubit = load("general");
  const auto model = tiny_model(qubit, 48, 5);
  const surrogate::Network<float> net(model);
  const auto syn = gsc::SyndromeSet::build(4);
  auto cfg = small_config(1, 1, 1e-3);
  cfg.stages[0].max_len = 4;
  cfg.units = StepUnits::Millivolt;
  Rng rng(3);
  gsc::GateSet start;
  for (int g = 0; g < 2; ++g) {
    qsim::ControlPulse p;
    p.dbz = qubit.nominal_dbz;
    for (int t = 0; t < 12; ++t) p.epsilons.push_back(rng.uniform(-2.0, 0.5));
    start.pulses.push_back(p);
  }
  const auto out = optimize_gatesets(model, syn, cfg, qubit, {start});
  std::vector<double> d;
  for (int g = 0; g < 2; ++g)
    for (int t = 0; t < 12; ++t) d.push_back((start.pulses[g].epsilons[t] - out[0].gates.pulses[g].epsilons[t]) / 1e-3);
  double norm = 0;
  for (double x : d) norm += x * x;
  norm = std::sqrt(norm);
  ASSERT_GT(norm, 1e-6);
  auto shifted = [&](double h) {
    gsc::GateSet s = start;
    for (int g = 0; g < 2; ++g)
      for (int t = 0; t < 12; ++t) s.pulses[g].epsilons[t] -= h * d[g * 12 + t] / norm;
    return surrogate_gsc_loss(net, {s}, syn, qubit)[0];
  };
  const double h = 2e-3;
  const double slope = (shifted(-h) - shifted(h)) / (2 * h);
  EXPECT_NEAR(slope, norm, 0.03 * norm);
}

TEST(Optimize, BoundsAndHoldSegments) {
  const auto qubit = load("specific");
  ASSERT_TRUE(qubit.hold.has_value());
  const auto model = tiny_model(qubit, 70, 6);
  const auto syn = gsc::SyndromeSet::build(4);
  auto cfg = small_config(2, 4, 50.0);
  cfg.stages[0].max_len = 4;
  const auto out = optimize_gatesets(model, syn, cfg, qubit);
  for (const auto& c : out) {
    for (const auto& p : c.gates.pulses) {
      ASSERT_EQ(p.length(), 16u);
      for (int t = 0; t < 12; ++t) {
        EXPECT_GE(p.epsilons[t], qubit.eps_min);
        EXPECT_LE(p.epsilons[t], qubit.eps_max);
      }
      for (int t = 12; t < 16; ++t) EXPECT_EQ(p.epsilons[t], -3.18);
    }
  }
}

TEST(Optimize, LossDecreasesOnTinySurrogate) {
  const auto qubit = load("general");
  const auto model = tiny_model(qubit, 48, 7);
  const auto syn = gsc::SyndromeSet::build(4);
  auto cfg = small_config(8, 60, 2.0);
  cfg.stages[0].max_len = 4;
  const auto out = optimize_gatesets(model, syn, cfg, qubit);
  int improved = 0;
  for (const auto& c : out) improved += c.final_loss < c.initial_loss;
  EXPECT_GE(improved, 6);
}

TEST(Optimize, NonFiniteCandidateIsFlaggedOthersContinue) {
  const auto qubit = load("general");
  const auto model = tiny_model(qubit, 48, 8);
  const auto syn = gsc::SyndromeSet::build(4);
  auto cfg = small_config(3, 4, 0.1);
  Rng rng(1);
  std::vector<gsc::GateSet> init;
  for (int n = 0; n < 3; ++n) init.push_back(random_gate_set(gate_layout(cfg, qubit), qubit, rng));
  init[1].pulses[0].epsilons[3] = std::numeric_limits<double>::quiet_NaN();
  std::vector<GateSetCandidate> out;
  try {
    out = optimize_gatesets(model, syn, cfg, qubit, init);
  } catch (const NumericError&) {
    FAIL() << "numeric failure of one candidate aborted the run";
  }
  EXPECT_TRUE(out[1].failed);
  EXPECT_FALSE(out[0].failed);
  EXPECT_FALSE(out[2].failed);
  EXPECT_EQ(out[0].history.size(), 4u);
  EXPECT_EQ(out[2].history.size(), 4u);
  EXPECT_EQ(select_top(out, 3).back(), 1);
}

TEST(Optimize, Deterministic) {
  const auto qubit = load("general");
  const auto model = tiny_model(qubit, 48, 9);
  const auto syn = gsc::SyndromeSet::build(4);
  auto cfg = small_config(4, 5, 0.3);
  cfg.stages[0].kb = 2;
  cfg.stages[0].delta = 0.1;
  const auto a = optimize_gatesets(model, syn, cfg, qubit);
  const auto b = optimize_gatesets(model, syn, cfg, qubit);
  for (int n = 0; n < 4; ++n) {
    EXPECT_EQ(a[n].history, b[n].history);
    EXPECT_EQ(a[n].gates.pulses[1].epsilons, b[n].gates.pulses[1].epsilons);
  }
}

TEST(SelectTop, MatchesFullSortAndTieRule) {
  Rng rng(2);
  std::vector<GateSetCandidate> c;
  for (int n = 0; n < 40; ++n) c.push_back(fake_candidate(n, rng.uniform(0, 1), 0.1));
  std::vector<int> order(40);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return c[a].final_loss < c[b].final_loss; });
  const auto top = select_top(c, 10);
  EXPECT_EQ(top, std::vector<int>(order.begin(), order.begin() + 10));
  EXPECT_EQ(select_top(c, 40), order);
  for (int i : top)
    for (int j = 0; j < 40; ++j)
      if (std::find(top.begin(), top.end(), j) == top.end()) EXPECT_LE(c[i].final_loss, c[j].final_loss);

  for (auto& x : c) x.final_loss = 0.25;
  EXPECT_EQ(select_top(c, 3), (std::vector<int>{0, 1, 2}));
  EXPECT_THROW(select_top(c, 41), ConfigError);
}

TEST(Evaluate, ConstructedGaugeCandidateIsPerfect) {
  auto qubit = load("general");
  qubit.noise.enabled = false;
  for (double theta : {0.0, 0.37, -1.9}) {
    const auto tx = qsim::rz(-theta) * qsim::rx(kPiD / 2) * qsim::rz(theta);
    const auto ty = qsim::rz(-theta) * qsim::ry(kPiD / 2) * qsim::rz(theta);
    const auto px = test_support::solve_pulse(tx, qubit, 12, 21);
    const auto py = test_support::solve_pulse(ty, qubit, 12, 22);
    ASSERT_TRUE(px && py);
    const auto ev = evaluate_gate_set(gsc::GateSet{{*px, *py}}, qubit, 5, 1);
    EXPECT_LT(ev.gate[0].coherent, 1e-8) << theta;
    EXPECT_LT(ev.gate[1].coherent, 1e-8) << theta;
    EXPECT_NEAR(std::remainder(ev.theta - theta, 2 * kPiD), 0.0, 1e-6);
    // Noise off: incoherent equals coherent.
    EXPECT_EQ(ev.gate[0].incoherent, ev.gate[0].coherent);
    EXPECT_EQ(ev.gate[1].incoherent, ev.gate[1].coherent);
  }
}

TEST(Evaluate, CoherentInfidelityIsGaugeInvariant) {
  Rng rng(4);
  const auto ideal = gsc::ideal_gates();
  for (int trial = 0; trial < 100; ++trial) {
    const auto ux = qsim::rx(kPiD / 2) * qsim::su2_exp(rng.uniform(-.2, .2), rng.uniform(-.2, .2), rng.uniform(-.2, .2), 1);
    const auto uy = qsim::ry(kPiD / 2) * qsim::su2_exp(rng.uniform(-.2, .2), rng.uniform(-.2, .2), rng.uniform(-.2, .2), 1);
    const double th = rng.uniform(-kPiD, kPiD);
    const auto a = qsim::global_z_correct(ux, uy);
    const auto b = qsim::global_z_correct(qsim::rz(-th) * ux * qsim::rz(th), qsim::rz(-th) * uy * qsim::rz(th));
    EXPECT_NEAR(qsim::entanglement_fidelity(ideal[0], a.x_gate), qsim::entanglement_fidelity(ideal[0], b.x_gate), 1e-9);
    EXPECT_NEAR(qsim::entanglement_fidelity(ideal[1], a.y_gate), qsim::entanglement_fidelity(ideal[1], b.y_gate), 1e-9);
  }
}

TEST(Evaluate, NoisyEvaluationIsBoundedAndSeeded) {
  const auto qubit = load("general");
  Rng rng(5);
  OptimizeConfig cfg;
  const auto gs = random_gate_set(gate_layout(cfg, qubit), qubit, rng);
  const auto a = evaluate_gate_set(gs, qubit, 20, 3);
  const auto b = evaluate_gate_set(gs, qubit, 20, 3);
  for (int g = 0; g < 2; ++g) {
    EXPECT_GE(a.gate[g].coherent, 0.0);
    EXPECT_LE(a.gate[g].coherent, 1.0);
    EXPECT_GE(a.gate[g].incoherent, 0.0);
    EXPECT_LE(a.gate[g].incoherent, 1.0);
    EXPECT_GT(a.gate[g].incoherent_se, 0.0);
    EXPECT_EQ(a.gate[g].incoherent, b.gate[g].incoherent);
  }
}

TEST(Report, RowCountsAndHistogram) {
  std::vector<GateSetCandidate> c;
  for (int n = 0; n < 12; ++n) c.push_back(fake_candidate(n, 0.01 * (12 - n), 0.05 * n));
  c[4].final_eval.reset();
  c[4].failed = true;
  const auto dir = fs::temp_directory_path() / "stcal_report_test";
  fs::remove_all(dir);
  const auto files = write_report(dir, c, 10, 1);
  EXPECT_EQ(count_lines(dir / "candidates.csv"), 13u);
  EXPECT_EQ(count_lines(dir / "initial_vs_final.csv"), 13u);
  EXPECT_EQ(count_lines(dir / "sorted_infidelities.csv"), 13u);
  EXPECT_EQ(count_lines(dir / "history.csv"), 1u + 12u * 3u);
  EXPECT_EQ(count_lines(dir / "top_k.csv"), 1u + 10u * 2u);
  EXPECT_EQ(count_lines(dir / "histogram.csv"), 21u);
  int pulse_files = 0;
  for (const auto& e : fs::directory_iterator(dir / "pulses")) pulse_files += e.is_regular_file();
  EXPECT_EQ(pulse_files, 12);
  const auto h = infidelity_histogram(c, 20);
  EXPECT_EQ(std::accumulate(h.begin(), h.end(), std::size_t{0}), 12u);
  EXPECT_EQ(h.back(), 1u);  // the failed candidate counts as infidelity 1
  fs::remove_all(dir);

  write_report(dir, {}, 10, 1);
  for (const char* f : {"candidates.csv", "history.csv", "initial_vs_final.csv", "sorted_infidelities.csv", "top_k.csv"})
    EXPECT_EQ(count_lines(dir / f), 1u) << f;
  fs::remove_all(dir);
}

TEST(Report, GateSetJsonRoundTrip) {
  const auto c = fake_candidate(0, 0.1, 0.1);
  const auto back = gate_set_from_json(gate_set_to_json(c.gates));
  ASSERT_EQ(back.pulses.size(), 2u);
  EXPECT_EQ(back.pulses[0].epsilons, c.gates.pulses[0].epsilons);
  EXPECT_EQ(back.pulses[1].dbz, 0.3);
  EXPECT_THROW(gate_set_from_json(nlohmann::json{{"gates", {{{"epsilons_mv", {1.0}}}}}}), ConfigError);
}

TEST(Report, Pearson) {
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {2, 4, 6, 8}), 1.0, 1e-15);
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {8, 6, 4, 2}), -1.0, 1e-15);
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {1, -1, -1, 1}), 0.0, 1e-15);
}
