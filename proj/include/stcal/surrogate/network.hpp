#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stcal/surrogate/encode.hpp"
#include "stcal/surrogate/spec.hpp"

namespace stcal::surrogate {

inline constexpr double kBnEpsilon = 1e-3;

struct BnStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

// Double-precision parameter set; the unit of (de)serialization.
//
// Per layer, in order:
//   conv   kernel (units, width * in)   column w * in + c multiplies time offset w - width/2
//          bias   (units, 1)
//   bn     gamma, beta (in, 1)
//   lstm   kernel (4H, in), recurrent_kernel (4H, H), bias (4H, 1); gate blocks i, f, c, o
//   dense  kernel (units, in), bias (units, 1)
struct Model {
  NetworkSpec spec;
  Normalization norm;
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> params;
  std::vector<BnStats> bn;  // running statistics, one entry per batch-norm layer

  std::size_t parameter_count() const;
};

struct InitOptions {
  // Initial forget-gate bias. Larger values keep the cell state alive through long runs of
  // zero padding after short pulses.
  double forget_bias = 1.0;
};

// Fan-in scaled uniform kernels (limit sqrt(3/fan_in), sqrt(6/fan_in) before relu),
// orthogonal recurrent kernel, zero biases except the forget gate, BN gamma 1 / beta 0.
// The output layer starts with a 10x smaller kernel and bias 0.5.
Model init_model(const NetworkSpec& spec, const Normalization& norm, std::uint64_t seed,
                 const InitOptions& opts = {});

enum class Mode { Train, Inference };

template <typename T>
class Network {
 public:
  // Per-layer intermediates kept for the backward pass.
  struct LayerTape {
    Mat<T> input;
    Mat<T> pre;   // conv/dense: pre-activation; lstm: hidden states (H, S * B)
    Mat<T> aux0;  // bn: normalized input; lstm: gate activations (4H, S * B)
    Mat<T> aux1;  // lstm: cell states
    Mat<T> aux2;  // lstm: tanh of cell states
    Vec<T> mean, var, inv_std;  // bn
  };
  struct Tape {
    Mode mode = Mode::Inference;
    int batch = 0;
    std::vector<LayerTape> layers;
    Mat<T> pre_clip;  // (2, B)
  };

  explicit Network(const Model& model);
  Model to_model() const;

  const NetworkSpec& spec() const { return spec_; }
  const Normalization& normalization() const { return norm_; }
  // Time steps seen by the network: l_max + 2 * pad.
  int steps() const { return norm_.l_max + 2 * spec_.pad; }

  std::vector<Mat<T>>& params() { return params_; }
  const std::vector<Mat<T>>& params() const { return params_; }
  const std::vector<std::string>& names() const { return names_; }

  // x: (input_channels, steps * B) as produced by batch_input. Returns (2, B) in [0, 1].
  // Throws NumericError naming the layer on a non-finite activation.
  Mat<T> forward(const Mat<T>& x, int batch, Mode mode, Tape* tape = nullptr) const;

  // Moves the running batch-norm statistics towards the batch statistics in a training tape.
  void update_running_stats(const Tape& tape, double momentum);

  // Reverse pass for upstream gradient d_out (2, B) on the clipped outputs. Parameter
  // gradients are written to *grads (resized to match params) and the input gradient to
  // *d_input; either may be null.
  void backward(const Tape& tape, const Mat<T>& d_out, std::vector<Mat<T>>* grads, Mat<T>* d_input) const;

 private:
  NetworkSpec spec_;
  Normalization norm_;
  std::vector<std::string> names_;
  std::vector<Mat<T>> params_;
  std::vector<Vec<T>> run_mean_, run_var_;
  std::vector<int> first_param_;  // per layer
  std::vector<int> bn_slot_;      // per layer, -1 if not batch-norm
};

// (1/B) sum_b w_b * (1/2) sum_k |out_kb - target_kb|. If d_out is non-null it receives the
// gradient with respect to out, using sign(0) = 0.
template <typename T>
T weighted_mae(const Mat<T>& out, const Mat<T>& target, std::span<const T> weights, Mat<T>* d_out);

// Convenience: inference-mode predictions for pulses, in batches of batch_size. Columns are
// (p_mean, p_stderr) per pulse.
template <typename T>
Mat<T> predict(const Network<T>& net, std::span<const qsim::ControlPulse* const> pulses, int batch_size = 512);

// d(sum_k upstream_k * out_k)/d(eps_t) in mV^-1 for each programmed segment of each pulse,
// via one inference-mode forward/backward. Entries for t >= L are zero.
template <typename T>
std::vector<std::vector<double>> grad_input(const Network<T>& net, std::span<const qsim::ControlPulse* const> pulses,
                                            const Mat<T>& upstream, Mat<T>* outputs = nullptr);

}  // namespace stcal::surrogate
