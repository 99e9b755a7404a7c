#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace stcal::surrogate {

enum class LayerKind { Conv, BatchNorm, Lstm, Dense };
enum class Activation { Linear, Selu, Sine, Relu };

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int units = 0;  // ignored for BatchNorm
  int width = 1;  // convolution width (odd), 'same' padding
  Activation activation = Activation::Linear;
};

// Sequence layers (Conv/BatchNorm) come first, then exactly one LSTM, then a dense head
// (BatchNorm not allowed there). The last dense layer has 2 units; its output is clipped to
// [0, 1]. Batch-norm layers sit after the activation of the preceding layer.
struct NetworkSpec {
  std::string name;
  int input_channels = 3;
  int pad = 1;  // zero segments added before and after the encoded sequence
  std::vector<LayerSpec> layers;

  static NetworkSpec general();
  static NetworkSpec specific();
  // Reduced network for desk-scale training.
  static NetworkSpec desk();
  // Two- to three-unit layers with every layer kind; for gradient checks.
  static NetworkSpec tiny();
  static NetworkSpec preset(const std::string& name);

  // Throws ConfigError on an invalid layer list.
  void validate() const;
  // Trainable parameter count.
  std::size_t parameter_count() const;
};

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);

std::string to_string(LayerKind k);
std::string to_string(Activation a);

}  // namespace stcal::surrogate
