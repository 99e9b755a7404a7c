#include "stcal/surrogate/network.hpp"

#include <cmath>

#include <Eigen/QR>

#include "stcal/common/errors.hpp"
#include "stcal/common/rng.hpp"

namespace stcal::surrogate {

namespace {

constexpr double kSeluLambda = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

template <typename T>
Mat<T> activate(const Mat<T>& z, Activation a) {
  switch (a) {
    case Activation::Linear: return z;
    case Activation::Selu: {
      const T l = T(kSeluLambda), la = T(kSeluLambda * kSeluAlpha);
      // Branch-free form; Eigen's select() does not vectorize exp.
      return (l * z.array().max(T(0)) + la * (z.array().min(T(0)).exp() - T(1))).matrix();
    }
    case Activation::Sine: return z.array().sin().matrix();
    case Activation::Relu: return z.cwiseMax(T(0));
  }
  return z;
}

// dz = dy * act'(z), in place on dy.
template <typename T>
void activation_backward(Mat<T>& dy, const Mat<T>& z, Activation a) {
  switch (a) {
    case Activation::Linear: return;
    case Activation::Selu: {
      const T l = T(kSeluLambda), la = T(kSeluLambda * kSeluAlpha);
      const auto pos = (z.array() > T(0)).template cast<T>();
      dy.array() *= l * pos + la * z.array().min(T(0)).exp() * (T(1) - pos);
      return;
    }
    case Activation::Sine: dy.array() *= z.array().cos(); return;
    case Activation::Relu: dy.array() *= (z.array() > T(0)).template cast<T>(); return;
  }
}

// Column ranges for a time offset o: output steps [out0, out0 + n) read input steps
// [in0, in0 + n).
struct Shift {
  Eigen::Index out0, in0, n;
};

Shift shift_for(int o, Eigen::Index S) {
  if (o >= 0) return {0, o, S - o};
  return {-o, 0, S + o};
}

// sigma(x) = (1 + tanh(x/2)) / 2; Eigen vectorizes tanh but not the logistic for float.
template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& z) {
  using T = typename Derived::Scalar;
  return ((T(0.5) * z.array()).tanh() * T(0.5) + T(0.5)).matrix();
}

template <typename T>
Mat<T> conv_forward(const Mat<T>& W, const Mat<T>& b, const Mat<T>& X, int width, Eigen::Index S, Eigen::Index B) {
  const Eigen::Index C = X.rows();
  Mat<T> Z(W.rows(), X.cols());
  Z.colwise() = b.col(0);
  for (int w = 0; w < width; ++w) {
    const auto sh = shift_for(w - width / 2, S);
    if (sh.n <= 0) continue;
    Z.middleCols(sh.out0 * B, sh.n * B).noalias() += W.middleCols(w * C, C) * X.middleCols(sh.in0 * B, sh.n * B);
  }
  return Z;
}

}  // namespace

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += static_cast<std::size_t>(p.size());
  return n;
}

Model init_model(const NetworkSpec& spec, const Normalization& norm, std::uint64_t seed, const InitOptions& opts) {
  spec.validate();
  Model m;
  m.spec = spec;
  m.norm = norm;
  Rng rng(seed);
  auto uniform = [&](Eigen::Index r, Eigen::Index c, double limit) {
    Eigen::MatrixXd x(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) x(i, j) = rng.uniform(-limit, limit);
    return x;
  };
  auto add = [&](std::string name, Eigen::MatrixXd v) {
    m.names.push_back(std::move(name));
    m.params.push_back(std::move(v));
  };
  int ch = spec.input_channels;
  int n_conv = 0, n_bn = 0, n_dense = 0;
  for (const auto& l : spec.layers) {
    const double gain = l.activation == Activation::Relu ? 6.0 : 3.0;
    switch (l.kind) {
      case LayerKind::Conv: {
        const std::string p = "conv" + std::to_string(n_conv++);
        const int fan_in = ch * l.width;
        add(p + "/kernel", uniform(l.units, fan_in, std::sqrt(gain / fan_in)));
        add(p + "/bias", Eigen::MatrixXd::Zero(l.units, 1));
        ch = l.units;
        break;
      }
      case LayerKind::BatchNorm: {
        const std::string p = "bn" + std::to_string(n_bn++);
        add(p + "/gamma", Eigen::MatrixXd::Ones(ch, 1));
        add(p + "/beta", Eigen::MatrixXd::Zero(ch, 1));
        m.bn.push_back({Eigen::VectorXd::Zero(ch), Eigen::VectorXd::Ones(ch)});
        break;
      }
      case LayerKind::Lstm: {
        const int H = l.units;
        add("lstm/kernel", uniform(4 * H, ch, std::sqrt(3.0 / ch)));
        Eigen::MatrixXd g(4 * H, H);
        for (Eigen::Index j = 0; j < H; ++j)
          for (Eigen::Index i = 0; i < 4 * H; ++i) g(i, j) = rng.normal(0.0, 1.0);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(4 * H, H);
        const Eigen::MatrixXd r = qr.matrixQR();
        for (Eigen::Index j = 0; j < H; ++j) {
          if (r(j, j) < 0) q.col(j) *= -1.0;
        }
        add("lstm/recurrent_kernel", q);
        Eigen::MatrixXd bias = Eigen::MatrixXd::Zero(4 * H, 1);
        bias.middleRows(H, H).setConstant(opts.forget_bias);
        add("lstm/bias", bias);
        ch = H;
        break;
      }
      case LayerKind::Dense: {
        const std::string p = "dense" + std::to_string(n_dense++);
        // The output layer starts small and centred in the clip range. A head whose
        // pre-activation is negative for every input never receives a gradient.
        const bool last = &l == &spec.layers.back();
        add(p + "/kernel", uniform(l.units, ch, (last ? 0.1 : 1.0) * std::sqrt(gain / ch)));
        add(p + "/bias", Eigen::MatrixXd::Constant(l.units, 1, last ? 0.5 : 0.0));
        ch = l.units;
        break;
      }
    }
  }
  return m;
}

template <typename T>
Network<T>::Network(const Model& model) : spec_(model.spec), norm_(model.norm), names_(model.names) {
  spec_.validate();
  if (model.parameter_count() != spec_.parameter_count()) throw ConfigError("parameter set does not match the network spec");
  for (const auto& p : model.params) params_.push_back(p.cast<T>());
  for (const auto& s : model.bn) {
    run_mean_.push_back(s.mean.cast<T>());
    run_var_.push_back(s.var.cast<T>());
  }
  int idx = 0, slot = 0, ch = spec_.input_channels;
  for (const auto& l : spec_.layers) {
    first_param_.push_back(idx);
    bn_slot_.push_back(l.kind == LayerKind::BatchNorm ? slot++ : -1);
    // Shape check against the layout documented on Model.
    auto expect = [&](Eigen::Index r, Eigen::Index c) {
      if (idx >= static_cast<int>(params_.size()) || params_[idx].rows() != r || params_[idx].cols() != c) {
        throw ConfigError("parameter '" + (idx < static_cast<int>(names_.size()) ? names_[idx] : std::string("?")) +
                          "' has the wrong shape");
      }
      ++idx;
    };
    switch (l.kind) {
      case LayerKind::Conv: expect(l.units, ch * l.width); expect(l.units, 1); ch = l.units; break;
      case LayerKind::BatchNorm: expect(ch, 1); expect(ch, 1); break;
      case LayerKind::Lstm: expect(4 * l.units, ch); expect(4 * l.units, l.units); expect(4 * l.units, 1); ch = l.units; break;
      case LayerKind::Dense: expect(l.units, ch); expect(l.units, 1); ch = l.units; break;
    }
  }
  if (slot != static_cast<int>(run_mean_.size())) throw ConfigError("batch-norm statistics do not match the spec");
}

template <typename T>
Model Network<T>::to_model() const {
  Model m;
  m.spec = spec_;
  m.norm = norm_;
  m.names = names_;
  for (const auto& p : params_) m.params.push_back(p.template cast<double>());
  for (std::size_t i = 0; i < run_mean_.size(); ++i) {
    m.bn.push_back({run_mean_[i].template cast<double>(), run_var_[i].template cast<double>()});
  }
  return m;
}

template <typename T>
Mat<T> Network<T>::forward(const Mat<T>& x, int B, Mode mode, Tape* tape) const {
  const Eigen::Index S = steps();
  if (B < 1 || x.rows() != spec_.input_channels || x.cols() != S * B) {
    throw DomainError("network input has the wrong shape");
  }
  Tape local;
  Tape& tp = tape ? *tape : local;
  tp.mode = mode;
  tp.batch = B;
  tp.layers.assign(spec_.layers.size(), {});

  Mat<T> h = x;
  for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
    const auto& L = spec_.layers[li];
    auto& lt = tp.layers[li];
    const int p0 = first_param_[li];
    lt.input = std::move(h);
    switch (L.kind) {
      case LayerKind::Conv: {
        lt.pre = conv_forward(params_[p0], params_[p0 + 1], lt.input, L.width, S, B);
        h = activate(lt.pre, L.activation);
        break;
      }
      case LayerKind::BatchNorm: {
        const auto& gamma = params_[p0];
        const auto& beta = params_[p0 + 1];
        const int slot = bn_slot_[li];
        if (mode == Mode::Train) {
          lt.mean = lt.input.rowwise().mean();
          lt.aux0 = lt.input.colwise() - lt.mean;
          lt.var = lt.aux0.array().square().rowwise().mean().matrix();
        } else {
          lt.mean = run_mean_[slot];
          lt.var = run_var_[slot];
          lt.aux0 = lt.input.colwise() - lt.mean;
        }
        lt.inv_std = (lt.var.array() + T(kBnEpsilon)).rsqrt().matrix();
        lt.aux0 = lt.inv_std.asDiagonal() * lt.aux0;
        h = (gamma.col(0).asDiagonal() * lt.aux0).colwise() + beta.col(0);
        break;
      }
      case LayerKind::Lstm: {
        const Eigen::Index H = L.units;
        const auto& Wx = params_[p0];
        const auto& Wh = params_[p0 + 1];
        const auto& bias = params_[p0 + 2];
        Mat<T> zx = Wx * lt.input;
        zx.colwise() += bias.col(0);
        lt.aux0.resize(4 * H, S * B);
        lt.aux1.resize(H, S * B);
        lt.aux2.resize(H, S * B);
        lt.pre.resize(H, S * B);
        Mat<T> hprev = Mat<T>::Zero(H, B);
        Mat<T> cprev = Mat<T>::Zero(H, B);
        Mat<T> z(4 * H, B);
        for (Eigen::Index t = 0; t < S; ++t) {
          z = zx.middleCols(t * B, B);
          if (t > 0) z.noalias() += Wh * hprev;
          auto g = lt.aux0.middleCols(t * B, B);
          g.topRows(2 * H) = sigmoid(z.topRows(2 * H));
          g.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
          g.bottomRows(H) = sigmoid(z.bottomRows(H));
          auto c = lt.aux1.middleCols(t * B, B);
          c = (g.middleRows(H, H).array() * cprev.array() + g.topRows(H).array() * g.middleRows(2 * H, H).array()).matrix();
          auto tc = lt.aux2.middleCols(t * B, B);
          tc = c.array().tanh().matrix();
          auto hh = lt.pre.middleCols(t * B, B);
          hh = (g.bottomRows(H).array() * tc.array()).matrix();
          hprev = hh;
          cprev = c;
        }
        h = std::move(hprev);
        break;
      }
      case LayerKind::Dense: {
        lt.pre = params_[p0] * lt.input;
        lt.pre.colwise() += params_[p0 + 1].col(0);
        h = activate(lt.pre, L.activation);
        break;
      }
    }
    if (!h.allFinite()) {
      throw NumericError("non-finite activation in layer " + std::to_string(li) + " (" + to_string(L.kind) + ")");
    }
  }
  tp.pre_clip = h;
  return h.cwiseMax(T(0)).cwiseMin(T(1));
}

template <typename T>
void Network<T>::update_running_stats(const Tape& tape, double momentum) {
  if (tape.mode != Mode::Train) return;
  const T m = T(momentum);
  for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
    const int slot = bn_slot_[li];
    if (slot < 0) continue;
    run_mean_[slot] = m * run_mean_[slot] + (T(1) - m) * tape.layers[li].mean;
    run_var_[slot] = m * run_var_[slot] + (T(1) - m) * tape.layers[li].var;
  }
}

template <typename T>
void Network<T>::backward(const Tape& tp, const Mat<T>& d_out, std::vector<Mat<T>>* grads, Mat<T>* d_input) const {
  const Eigen::Index S = steps();
  const Eigen::Index B = tp.batch;
  if (d_out.rows() != 2 || d_out.cols() != B || tp.layers.size() != spec_.layers.size()) {
    throw DomainError("backward called with a mismatched tape or upstream gradient");
  }
  if (grads) {
    grads->resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) (*grads)[i].setZero(params_[i].rows(), params_[i].cols());
  }
  Mat<T> d = d_out.cwiseProduct(
      ((tp.pre_clip.array() >= T(0)) && (tp.pre_clip.array() <= T(1))).template cast<T>().matrix());

  for (std::size_t li = spec_.layers.size(); li-- > 0;) {
    const auto& L = spec_.layers[li];
    const auto& lt = tp.layers[li];
    const int p0 = first_param_[li];
    const bool need_dx = li > 0 || d_input != nullptr;
    switch (L.kind) {
      case LayerKind::Conv: {
        activation_backward(d, lt.pre, L.activation);
        const auto& W = params_[p0];
        const Eigen::Index C = lt.input.rows();
        Mat<T> dx;
        if (need_dx) dx.setZero(C, S * B);
        for (int w = 0; w < L.width; ++w) {
          const auto sh = shift_for(w - L.width / 2, S);
          if (sh.n <= 0) continue;
          const auto dz = d.middleCols(sh.out0 * B, sh.n * B);
          if (grads) {
            (*grads)[p0].middleCols(w * C, C).noalias() += dz * lt.input.middleCols(sh.in0 * B, sh.n * B).transpose();
          }
          if (need_dx) dx.middleCols(sh.in0 * B, sh.n * B).noalias() += W.middleCols(w * C, C).transpose() * dz;
        }
        if (grads) (*grads)[p0 + 1] = d.rowwise().sum();
        d = std::move(dx);
        break;
      }
      case LayerKind::BatchNorm: {
        const auto& gamma = params_[p0];
        if (grads) {
          (*grads)[p0] = d.cwiseProduct(lt.aux0).rowwise().sum();
          (*grads)[p0 + 1] = d.rowwise().sum();
        }
        if (!need_dx) break;
        if (tp.mode == Mode::Train) {
          const T n = T(S * B);
          Mat<T> dxhat = gamma.col(0).asDiagonal() * d;
          const Vec<T> s1 = dxhat.rowwise().sum();
          const Vec<T> s2 = dxhat.cwiseProduct(lt.aux0).rowwise().sum();
          Mat<T> dx = (n * dxhat).colwise() - s1;
          dx -= (s2.asDiagonal() * lt.aux0);
          d = (lt.inv_std / n).asDiagonal() * dx;
        } else {
          d = (gamma.col(0).cwiseProduct(lt.inv_std)).asDiagonal() * d;
        }
        break;
      }
      case LayerKind::Lstm: {
        const Eigen::Index H = L.units;
        const auto& Wx = params_[p0];
        const auto& Wh = params_[p0 + 1];
        Mat<T> dz(4 * H, S * B);
        Mat<T> dh = std::move(d);
        Mat<T> dc = Mat<T>::Zero(H, B);
        for (Eigen::Index t = S; t-- > 0;) {
          const auto g = lt.aux0.middleCols(t * B, B);
          const auto gi = g.topRows(H).array();
          const auto gf = g.middleRows(H, H).array();
          const auto gg = g.middleRows(2 * H, H).array();
          const auto go = g.bottomRows(H).array();
          const auto tc = lt.aux2.middleCols(t * B, B).array();
          auto dzb = dz.middleCols(t * B, B);
          dzb.bottomRows(H) = (dh.array() * tc * go * (T(1) - go)).matrix();
          dc.array() += dh.array() * go * (T(1) - tc.square());
          dzb.topRows(H) = (dc.array() * gg * gi * (T(1) - gi)).matrix();
          if (t > 0) {
            dzb.middleRows(H, H) = (dc.array() * lt.aux1.middleCols((t - 1) * B, B).array() * gf * (T(1) - gf)).matrix();
          } else {
            dzb.middleRows(H, H).setZero();
          }
          dzb.middleRows(2 * H, H) = (dc.array() * gi * (T(1) - gg.square())).matrix();
          dc.array() *= gf;
          if (t > 0) dh.noalias() = Wh.transpose() * dzb;
        }
        if (grads) {
          (*grads)[p0].noalias() = dz * lt.input.transpose();
          if (S > 1) {
            (*grads)[p0 + 1].noalias() = dz.rightCols((S - 1) * B) * lt.pre.leftCols((S - 1) * B).transpose();
          }
          (*grads)[p0 + 2] = dz.rowwise().sum();
        }
        if (need_dx) d.noalias() = Wx.transpose() * dz;
        break;
      }
      case LayerKind::Dense: {
        activation_backward(d, lt.pre, L.activation);
        if (grads) {
          (*grads)[p0].noalias() = d * lt.input.transpose();
          (*grads)[p0 + 1] = d.rowwise().sum();
        }
        if (need_dx) d = params_[p0].transpose() * d;
        break;
      }
    }
  }
  if (d_input) *d_input = std::move(d);
}

template <typename T>
T weighted_mae(const Mat<T>& out, const Mat<T>& target, std::span<const T> weights, Mat<T>* d_out) {
  const Eigen::Index B = out.cols();
  if (target.rows() != out.rows() || target.cols() != B || static_cast<Eigen::Index>(weights.size()) != B || B == 0) {
    throw DomainError("weighted_mae: shape mismatch");
  }
  const Mat<T> r = out - target;
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> w(weights.data(), B);
  const T k = T(1) / (T(out.rows()) * T(B));
  const T loss = (r.cwiseAbs().colwise().sum().cwiseProduct(w)).sum() * k;
  if (d_out) {
    *d_out = r.unaryExpr([](T v) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
    *d_out = (*d_out) * (w * k).asDiagonal();
  }
  return loss;
}

template <typename T>
Mat<T> predict(const Network<T>& net, std::span<const qsim::ControlPulse* const> pulses, int batch_size) {
  Mat<T> out(2, static_cast<Eigen::Index>(pulses.size()));
  for (std::size_t start = 0; start < pulses.size(); start += batch_size) {
    const std::size_t n = std::min<std::size_t>(batch_size, pulses.size() - start);
    const auto chunk = pulses.subspan(start, n);
    const Mat<T> x = batch_input<T>(chunk, net.normalization(), net.spec().pad);
    out.middleCols(start, n) = net.forward(x, static_cast<int>(n), Mode::Inference);
  }
  return out;
}

template <typename T>
std::vector<std::vector<double>> grad_input(const Network<T>& net, std::span<const qsim::ControlPulse* const> pulses,
                                            const Mat<T>& upstream, Mat<T>* outputs) {
  const int B = static_cast<int>(pulses.size());
  const int pad = net.spec().pad;
  const Mat<T> x = batch_input<T>(pulses, net.normalization(), pad);
  typename Network<T>::Tape tape;
  const Mat<T> out = net.forward(x, B, Mode::Inference, &tape);
  if (outputs) *outputs = out;
  Mat<T> dx;
  net.backward(tape, upstream, nullptr, &dx);
  const double scale = net.normalization().eps_scale;
  std::vector<std::vector<double>> g(B);
  for (int b = 0; b < B; ++b) {
    const std::size_t L = pulses[b]->length();
    g[b].resize(L);
    for (std::size_t t = 0; t < L; ++t) g[b][t] = static_cast<double>(dx(0, (static_cast<Eigen::Index>(t) + pad) * B + b)) * scale;
  }
  return g;
}

#define STCAL_INSTANTIATE(T)                                                                                       \
  template class Network<T>;                                                                                       \
  template T weighted_mae<T>(const Mat<T>&, const Mat<T>&, std::span<const T>, Mat<T>*);                           \
  template Mat<T> predict<T>(const Network<T>&, std::span<const qsim::ControlPulse* const>, int);                  \
  template std::vector<std::vector<double>> grad_input<T>(const Network<T>&, std::span<const qsim::ControlPulse* const>, \
                                                          const Mat<T>&, Mat<T>*);

STCAL_INSTANTIATE(float)
STCAL_INSTANTIATE(double)
STCAL_INSTANTIATE(long double)

}  // namespace stcal::surrogate
