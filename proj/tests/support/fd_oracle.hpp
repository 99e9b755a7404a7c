#pragma once

// Finite-difference oracle for the surrogate's parameter and input gradients. Central
// differences are taken in long double; coordinates whose perturbation crosses a kink
// (selu/relu sign, clip edge, residual sign) are skipped.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "stcal/common/rng.hpp"
#include "stcal/surrogate/network.hpp"

namespace stcal::test_support {

using namespace stcal::surrogate;

using LD = long double;

struct Problem {
  Model model;
  std::vector<qsim::ControlPulse> pulses;
  Eigen::MatrixXd targets;
  std::vector<double> weights;
};

inline std::vector<const qsim::ControlPulse*> ptrs(const std::vector<qsim::ControlPulse>& v) {
  std::vector<const qsim::ControlPulse*> p;
  for (const auto& x : v) p.push_back(&x);
  return p;
}

// Random tiny network with every bias and BN statistic moved off its default so that no
// path is trivially inactive. The last bias is centred so outputs sit inside the clip range.
inline Problem make_problem(std::uint64_t seed, int batch) {
  Normalization norm{1.0 / 3.2, 1.0, 6};
  Problem p;
  p.model = init_model(NetworkSpec::tiny(), norm, seed);
  Rng rng(seed + 1000);
  for (std::size_t i = 0; i < p.model.params.size(); ++i) {
    auto& m = p.model.params[i];
    if (p.model.names[i].find("bias") != std::string::npos || p.model.names[i].find("beta") != std::string::npos) {
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-0.3, 0.3);
    }
    if (p.model.names[i].find("gamma") != std::string::npos) {
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(0.5, 1.5);
    }
  }
  for (auto& s : p.model.bn) {
    for (Eigen::Index k = 0; k < s.mean.size(); ++k) {
      s.mean[k] = rng.uniform(-0.5, 0.5);
      s.var[k] = rng.uniform(0.5, 2.0);
    }
  }
  // Hidden relu units biased positive and the output bias near 0.5.
  auto& last_bias = p.model.params.back();
  last_bias.setConstant(0.5);
  p.model.params[p.model.params.size() - 3].array() += 0.5;
  for (int b = 0; b < batch; ++b) {
    qsim::ControlPulse pulse;
    pulse.dbz = 0.2645;
    pulse.epsilons.resize(rng.uniform_int(3, 6));
    for (auto& e : pulse.epsilons) e = rng.uniform(-3.2, 1.27);
    p.pulses.push_back(pulse);
  }
  p.targets.resize(2, batch);
  for (Eigen::Index k = 0; k < p.targets.size(); ++k) p.targets.data()[k] = rng.uniform(0.0, 1.0);
  for (int b = 0; b < batch; ++b) p.weights.push_back(rng.uniform(1.0, 3.0));
  return p;
}

// Everything a central difference could step across: selu/relu kinks, the clip edges and
// the sign of each residual.
inline std::vector<bool> signature(const Network<LD>& net, const Network<LD>::Tape& tape, const Mat<LD>& out,
                            const Mat<LD>& target) {
  std::vector<bool> s;
  for (std::size_t i = 0; i < tape.layers.size(); ++i) {
    const auto& L = net.spec().layers[i];
    if ((L.kind == LayerKind::Conv || L.kind == LayerKind::Dense) &&
        (L.activation == Activation::Selu || L.activation == Activation::Relu)) {
      for (Eigen::Index k = 0; k < tape.layers[i].pre.size(); ++k) s.push_back(tape.layers[i].pre.data()[k] > 0);
    }
  }
  for (Eigen::Index k = 0; k < tape.pre_clip.size(); ++k) {
    s.push_back(tape.pre_clip.data()[k] >= 0);
    s.push_back(tape.pre_clip.data()[k] <= 1);
    s.push_back(out.data()[k] > target.data()[k]);
  }
  return s;
}

struct Eval {
  LD loss;
  std::vector<bool> sig;
};

inline Eval eval_ld(const Model& m, const std::vector<qsim::ControlPulse>& pulses, const Eigen::MatrixXd& targets,
             const std::vector<double>& weights, Mode mode) {
  Network<LD> net(m);
  const auto pp = ptrs(pulses);
  const Mat<LD> x = batch_input<LD>(pp, m.norm, m.spec.pad);
  Network<LD>::Tape tape;
  const Mat<LD> out = net.forward(x, static_cast<int>(pulses.size()), mode, &tape);
  const Mat<LD> t = targets.cast<LD>();
  std::vector<LD> w(weights.begin(), weights.end());
  return {weighted_mae<LD>(out, t, w, nullptr), signature(net, tape, out, t)};
}

inline bool close(double g, double fd, double tol) {
  const double scale = std::max(std::abs(g), std::abs(fd));
  if (scale < 1e-11) return true;
  return std::abs(g - fd) <= tol * scale;
}

struct FdStats {
  int checked = 0;
  int skipped = 0;
  int failed = 0;
  double worst_rel = 0.0;  // over checked coordinates with a non-negligible scale
  std::string first_failure;

  void record(double g, double fd, double tol, const std::string& where) {
    ++checked;
    const double scale = std::max(std::abs(g), std::abs(fd));
    if (scale >= 1e-11) worst_rel = std::max(worst_rel, std::abs(g - fd) / scale);
    if (!close(g, fd, tol)) {
      if (failed++ == 0) {
        std::ostringstream os;
        os << where << " analytic " << g << " fd " << fd;
        first_failure = os.str();
      }
    }
  }
};

// Every parameter coordinate of the tiny spec for seeds 1..n_seeds (batch 4).
inline FdStats param_fd_check(Mode mode, int n_seeds = 10, double tol = 1e-4) {
  const double h = 1e-5;
  FdStats st;
  for (std::uint64_t seed = 1; seed <= static_cast<std::uint64_t>(n_seeds); ++seed) {
    const auto p = make_problem(seed, 4);
    Network<double> net(p.model);
    const auto pp = ptrs(p.pulses);
    const Mat<double> x = batch_input<double>(pp, p.model.norm, p.model.spec.pad);
    Network<double>::Tape tape;
    const Mat<double> out = net.forward(x, 4, mode, &tape);
    Mat<double> d_out;
    weighted_mae<double>(out, p.targets, p.weights, &d_out);
    std::vector<Mat<double>> grads;
    net.backward(tape, d_out, &grads, nullptr);

    const auto base = eval_ld(p.model, p.pulses, p.targets, p.weights, mode);
    for (std::size_t i = 0; i < p.model.params.size(); ++i) {
      for (Eigen::Index k = 0; k < p.model.params[i].size(); ++k) {
        Model plus = p.model, minus = p.model;
        plus.params[i].data()[k] += h;
        minus.params[i].data()[k] -= h;
        const auto ep = eval_ld(plus, p.pulses, p.targets, p.weights, mode);
        const auto em = eval_ld(minus, p.pulses, p.targets, p.weights, mode);
        if (ep.sig != base.sig || em.sig != base.sig) {
          ++st.skipped;
          continue;
        }
        // Perturbation is applied to the double value, so use the realized step.
        const LD step = static_cast<LD>(plus.params[i].data()[k]) - static_cast<LD>(minus.params[i].data()[k]);
        const double fd = static_cast<double>((ep.loss - em.loss) / step);
        st.record(grads[i].data()[k], fd, tol,
                  p.model.names[i] + "[" + std::to_string(k) + "] seed " + std::to_string(seed));
      }
    }
  }
  return st;
}

// d(upstream . outputs)/d eps_t for every active segment, seeds 1..n_seeds.
inline FdStats input_fd_check(int n_seeds = 40, double tol = 1e-4) {
  const double h = 1e-5;
  FdStats st;
  for (std::uint64_t seed = 1; seed <= static_cast<std::uint64_t>(n_seeds); ++seed) {
    auto p = make_problem(seed, 4);
    Rng rng(seed * 7);
    Eigen::MatrixXd up(2, 4);
    for (Eigen::Index k = 0; k < up.size(); ++k) up.data()[k] = rng.uniform(-1, 1);
    Network<double> net(p.model);
    const auto pp = ptrs(p.pulses);
    const auto g = grad_input<double>(net, pp, up);
    if (g.size() != p.pulses.size()) {
      ++st.failed;
      st.first_failure = "grad_input returned the wrong number of pulses";
      return st;
    }
    auto objective = [&](const std::vector<qsim::ControlPulse>& pulses, std::vector<bool>* sig) {
      Network<LD> nl(p.model);
      const auto q = ptrs(pulses);
      const Mat<LD> x = batch_input<LD>(q, p.model.norm, p.model.spec.pad);
      Network<LD>::Tape tape;
      const Mat<LD> out = nl.forward(x, 4, Mode::Inference, &tape);
      *sig = signature(nl, tape, out, Mat<LD>::Constant(2, 4, LD(-1)));
      return (out.cwiseProduct(up.cast<LD>())).sum();
    };
    std::vector<bool> s0;
    objective(p.pulses, &s0);
    for (std::size_t b = 0; b < p.pulses.size(); ++b) {
      if (g[b].size() != p.pulses[b].length()) {
        ++st.failed;
        st.first_failure = "grad_input length mismatch";
        return st;
      }
      for (std::size_t t = 0; t < p.pulses[b].length(); ++t) {
        auto plus = p.pulses, minus = p.pulses;
        plus[b].epsilons[t] += h;
        minus[b].epsilons[t] -= h;
        std::vector<bool> sp, sm;
        const LD fp = objective(plus, &sp), fm = objective(minus, &sm);
        if (sp != s0 || sm != s0) {
          ++st.skipped;
          continue;
        }
        const LD step = static_cast<LD>(plus[b].epsilons[t]) - static_cast<LD>(minus[b].epsilons[t]);
        const double fd = static_cast<double>((fp - fm) / step);
        st.record(g[b][t], fd, tol, "pulse " + std::to_string(b) + " t " + std::to_string(t) + " seed " +
                                        std::to_string(seed));
      }
    }
  }
  return st;
}

}  // namespace stcal::test_support
