#include "stcal/surrogate/metrics.hpp"

#include <cmath>

#include "stcal/common/errors.hpp"

namespace stcal::surrogate {

using nlohmann::json;

json to_json(const Metrics& m) {
  return {{"count", m.count},
          {"mae", {{"p_mean", m.mae[0]}, {"p_stderr", m.mae[1]}, {"average", m.mae_avg}}},
          {"mse", {{"p_mean", m.mse[0]}, {"p_stderr", m.mse[1]}, {"average", m.mse_avg}}},
          {"rmse", {{"p_mean", m.rmse[0]}, {"p_stderr", m.rmse[1]}, {"average", m.rmse_avg}}},
          {"A_0.05", m.a005},
          {"A_0.01", m.a001}};
}

Metrics compute_metrics(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.cols() == 0) throw DomainError("cannot evaluate on an empty set");
  if (pred.rows() != 2 || target.rows() != 2 || pred.cols() != target.cols()) throw DomainError("metrics: shape mismatch");
  Metrics m;
  m.count = static_cast<std::size_t>(pred.cols());
  const double n = static_cast<double>(pred.cols());
  const Eigen::MatrixXd err = (pred - target).cwiseAbs();
  for (int k = 0; k < 2; ++k) {
    m.mae[k] = err.row(k).sum() / n;
    m.mse[k] = err.row(k).squaredNorm() / n;
    m.rmse[k] = std::sqrt(m.mse[k]);
  }
  m.mae_avg = 0.5 * (m.mae[0] + m.mae[1]);
  m.mse_avg = 0.5 * (m.mse[0] + m.mse[1]);
  m.rmse_avg = std::sqrt(m.mse_avg);
  std::size_t hit5 = 0, hit1 = 0;
  for (Eigen::Index i = 0; i < pred.cols(); ++i) {
    hit5 += err(0, i) <= 0.05;
    hit1 += err(0, i) <= 0.01;
  }
  m.a005 = static_cast<double>(hit5) / n;
  m.a001 = static_cast<double>(hit1) / n;
  return m;
}

namespace {

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> predict_records(const Model& model, std::span<const probe::ProbeRecord> recs) {
  std::vector<const qsim::ControlPulse*> pulses(recs.size());
  Eigen::MatrixXd target(2, static_cast<Eigen::Index>(recs.size()));
  for (std::size_t i = 0; i < recs.size(); ++i) {
    pulses[i] = &recs[i].pulse;
    target(0, i) = recs[i].stats.p_mean;
    target(1, i) = recs[i].stats.p_stderr;
  }
  const Network<double> net(model);
  return {predict(net, std::span<const qsim::ControlPulse* const>(pulses)), target};
}

}  // namespace

Metrics evaluate(const Model& model, std::span<const probe::ProbeRecord> records) {
  if (records.empty()) throw DomainError("cannot evaluate on an empty set");
  const auto [pred, target] = predict_records(model, records);
  return compute_metrics(pred, target);
}

std::vector<LengthRow> length_generalization_report(const Model& model, const qsim::QubitConfig& cfg,
                                                    const probe::SamplingStrategy& strategy,
                                                    std::span<const int> lengths, std::size_t count,
                                                    std::uint64_t seed, int window_min, int window_max, int workers) {
  std::vector<LengthRow> rows;
  for (int L : lengths) {
    if (L < 1 || L > model.norm.l_max) {
      throw DomainError("length " + std::to_string(L) + " is outside the encoder capacity");
    }
    auto s = strategy;
    s.length_min = s.length_max = L;
    const auto recs = probe::generate_dataset(s, cfg, count, mix_seed(seed, static_cast<std::uint64_t>(L)), workers);
    const auto m = evaluate(model, recs);
    LengthRow row;
    row.length = L;
    row.count = m.count;
    row.mae = m.mae;
    row.rmse = m.rmse;
    row.in_window = L >= window_min && L <= window_max;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace stcal::surrogate
