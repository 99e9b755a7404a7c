#include "stcal/surrogate/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stcal/common/errors.hpp"
#include "stcal/common/rng.hpp"

namespace stcal::surrogate {

using nlohmann::json;

TrainConfig TrainConfig::general() { return {}; }

TrainConfig TrainConfig::specific() {
  TrainConfig c;
  c.plateau_factor = 0.9;
  c.plateau_patience = 25;
  c.early_stop = 60;
  return c;
}

void TrainConfig::validate() const {
  if (!(lr0 > 0) || !(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(adam_eps > 0)) {
    throw ConfigError("bad Adam settings");
  }
  if (!(plateau_factor > 0 && plateau_factor < 1)) throw ConfigError("plateau factor must be in (0, 1)");
  if (plateau_patience < 1 || early_stop <= plateau_patience) throw ConfigError("need 1 <= patience < early_stop");
  if (batch_size < 1 || max_epochs < 1) throw ConfigError("batch_size and max_epochs must be >= 1");
  if (!(bn_momentum >= 0 && bn_momentum < 1)) throw ConfigError("bn_momentum must be in [0, 1)");
}

json to_json(const TrainConfig& c) {
  return {{"lr0", c.lr0},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"plateau_factor", c.plateau_factor},
          {"plateau_patience", c.plateau_patience},
          {"early_stop", c.early_stop},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"bn_momentum", c.bn_momentum},
          {"weighted", c.weighted},
          {"double_precision", c.double_precision},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j, const TrainConfig& base) {
  TrainConfig c = base;
  try {
    c.lr0 = j.value("lr0", c.lr0);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.plateau_factor = j.value("plateau_factor", c.plateau_factor);
    c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
    c.early_stop = j.value("early_stop", c.early_stop);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
    c.weighted = j.value("weighted", c.weighted);
    c.double_precision = j.value("double_precision", c.double_precision);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad training config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

template <typename T>
struct Adam {
  std::vector<Mat<T>> m, v;
  long step = 0;

  void apply(std::vector<Mat<T>>& params, const std::vector<Mat<T>>& grads, const TrainConfig& c, double lr) {
    if (m.empty()) {
      for (const auto& p : params) {
        m.push_back(Mat<T>::Zero(p.rows(), p.cols()));
        v.push_back(Mat<T>::Zero(p.rows(), p.cols()));
      }
    }
    ++step;
    const T b1 = T(c.beta1), b2 = T(c.beta2);
    const T corr1 = T(1) - T(std::pow(c.beta1, step));
    const T corr2 = T(1) - T(std::pow(c.beta2, step));
    const T a = T(lr) / corr1;
    const T eps = T(c.adam_eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * grads[i];
      v[i] = b2 * v[i] + (T(1) - b2) * grads[i].cwiseAbs2();
      params[i].array() -= a * m[i].array() / ((v[i].array() / corr2).sqrt() + eps);
    }
  }
};

std::vector<const qsim::ControlPulse*> pulses_of(std::span<const probe::ProbeRecord> recs) {
  std::vector<const qsim::ControlPulse*> p(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) p[i] = &recs[i].pulse;
  return p;
}

template <typename T>
double mae_of(const Network<T>& net, std::span<const probe::ProbeRecord> recs) {
  if (recs.empty()) throw DomainError("empty record set");
  const auto pulses = pulses_of(recs);
  const Mat<T> pred = predict(net, std::span<const qsim::ControlPulse* const>(pulses), 512);
  double s = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    s += std::abs(static_cast<double>(pred(0, i)) - recs[i].stats.p_mean) +
         std::abs(static_cast<double>(pred(1, i)) - recs[i].stats.p_stderr);
  }
  return s / (2.0 * static_cast<double>(recs.size()));
}

template <typename T>
TrainResult run(const Model& init, std::span<const probe::ProbeRecord> train_set, std::span<const double> weights,
                std::span<const probe::ProbeRecord> val_set, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  Network<T> net(init);
  Adam<T> adam;
  TrainResult res;
  res.model = init;
  res.best_validation_loss = std::numeric_limits<double>::infinity();
  double lr = cfg.lr0;
  int since_best = 0, since_cut = 0;
  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::vector<const qsim::ControlPulse*> batch_pulses;
  std::vector<T> batch_w;
  std::vector<Mat<T>> grads;
  typename Network<T>::Tape tape;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::derive(cfg.seed, {0x7472616e, static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), rng.engine());

    double loss_sum = 0;
    bool bad = false;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t bsz = std::min<std::size_t>(cfg.batch_size, n - start);
      batch_pulses.resize(bsz);
      batch_w.resize(bsz);
      Mat<T> target(2, static_cast<Eigen::Index>(bsz));
      for (std::size_t k = 0; k < bsz; ++k) {
        const auto& r = train_set[order[start + k]];
        batch_pulses[k] = &r.pulse;
        batch_w[k] = T(weights.empty() ? 1.0 : weights[order[start + k]]);
        target(0, k) = T(r.stats.p_mean);
        target(1, k) = T(r.stats.p_stderr);
      }
      const Mat<T> x = batch_input<T>(batch_pulses, net.normalization(), net.spec().pad);
      Mat<T> out;
      try {
        out = net.forward(x, static_cast<int>(bsz), Mode::Train, &tape);
      } catch (const NumericError&) {
        bad = true;
        break;
      }
      Mat<T> d_out;
      const double loss = static_cast<double>(weighted_mae<T>(out, target, batch_w, &d_out));
      if (!std::isfinite(loss)) {
        bad = true;
        break;
      }
      loss_sum += loss * static_cast<double>(bsz);
      net.backward(tape, d_out, &grads, nullptr);
      adam.apply(net.params(), grads, cfg, lr);
      net.update_running_stats(tape, cfg.bn_momentum);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = bad ? std::numeric_limits<double>::quiet_NaN() : loss_sum / static_cast<double>(n);
    if (!bad) {
      try {
        rec.validation_loss = mae_of(net, val_set);
      } catch (const NumericError&) {
        bad = true;
      }
    }
    if (bad || !std::isfinite(rec.validation_loss)) {
      rec.validation_loss = std::numeric_limits<double>::quiet_NaN();
      res.history.push_back(rec);
      res.diverged = true;
      break;
    }
    res.history.push_back(rec);

    if (rec.validation_loss < res.best_validation_loss) {
      res.best_validation_loss = rec.validation_loss;
      res.best_epoch = epoch;
      res.model = net.to_model();
      since_best = 0;
      since_cut = 0;
    } else {
      ++since_best;
      if (++since_cut >= cfg.plateau_patience) {
        lr *= cfg.plateau_factor;
        since_cut = 0;
      }
    }
    if (on_epoch && !on_epoch(rec)) break;
    if (since_best >= cfg.early_stop) break;
  }
  return res;
}

}  // namespace

TrainResult train(const Model& init, std::span<const probe::ProbeRecord> train_set, std::span<const double> weights,
                  std::span<const probe::ProbeRecord> validation_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty() || validation_set.empty()) throw ConfigError("training needs non-empty train and validation sets");
  if (!weights.empty() && weights.size() != train_set.size()) throw ConfigError("one weight per training record required");
  for (const auto& r : train_set) {
    if (!(r.stats.p_mean >= 0 && r.stats.p_mean <= 1 && r.stats.p_stderr >= 0 && r.stats.p_stderr <= 1)) {
      throw DomainError("training targets must lie in [0, 1]");
    }
  }
  if (cfg.double_precision) return run<double>(init, train_set, weights, validation_set, cfg, on_epoch);
  return run<float>(init, train_set, weights, validation_set, cfg, on_epoch);
}

double validation_mae(const Model& model, std::span<const probe::ProbeRecord> records) {
  return mae_of(Network<double>(model), records);
}

}  // namespace stcal::surrogate
