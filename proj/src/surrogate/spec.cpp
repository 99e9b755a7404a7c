#include "stcal/surrogate/spec.hpp"

#include "stcal/common/errors.hpp"

namespace stcal::surrogate {

using nlohmann::json;

namespace {

LayerSpec conv(int units, int width, Activation a) { return {LayerKind::Conv, units, width, a}; }
LayerSpec bn() { return {LayerKind::BatchNorm, 0, 1, Activation::Linear}; }
LayerSpec lstm(int units) { return {LayerKind::Lstm, units, 1, Activation::Linear}; }
LayerSpec dense(int units, Activation a) { return {LayerKind::Dense, units, 1, a}; }

NetworkSpec build(std::string name, std::vector<int> c3, int bn3, std::vector<int> c1, int bn1, int rec,
                  std::vector<int> head) {
  NetworkSpec s;
  s.name = std::move(name);
  for (std::size_t i = 0; i < c3.size(); ++i) {
    s.layers.push_back(conv(c3[i], 3, Activation::Selu));
    if (static_cast<int>(i) == bn3) s.layers.push_back(bn());
  }
  for (std::size_t i = 0; i < c1.size(); ++i) {
    s.layers.push_back(conv(c1[i], 1, Activation::Sine));
    if (static_cast<int>(i) == bn1) s.layers.push_back(bn());
  }
  s.layers.push_back(lstm(rec));
  for (int u : head) s.layers.push_back(dense(u, Activation::Relu));
  return s;
}

Activation activation_from_string(const std::string& s) {
  if (s == "linear") return Activation::Linear;
  if (s == "selu") return Activation::Selu;
  if (s == "sine") return Activation::Sine;
  if (s == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + s + "'");
}

LayerKind kind_from_string(const std::string& s) {
  if (s == "conv") return LayerKind::Conv;
  if (s == "batch_norm") return LayerKind::BatchNorm;
  if (s == "lstm") return LayerKind::Lstm;
  if (s == "dense") return LayerKind::Dense;
  throw ConfigError("unknown layer kind '" + s + "'");
}

}  // namespace

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::BatchNorm: return "batch_norm";
    case LayerKind::Lstm: return "lstm";
    case LayerKind::Dense: return "dense";
  }
  return "?";
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Selu: return "selu";
    case Activation::Sine: return "sine";
    case Activation::Relu: return "relu";
  }
  return "?";
}

NetworkSpec NetworkSpec::general() {
  return build("general", {16, 32, 64}, 1, {70, 50, 20}, 0, 100, {100, 70, 10, 2});
}

NetworkSpec NetworkSpec::specific() {
  return build("specific", {30, 50, 80}, -1, {90, 80, 50}, -1, 150, {150, 100, 20, 2});
}

NetworkSpec NetworkSpec::desk() {
  return build("desk", {8, 16, 32}, 1, {24, 16, 12}, 0, 48, {48, 24, 8, 2});
}

NetworkSpec NetworkSpec::tiny() {
  return build("tiny", {3, 2}, 0, {2, 2}, 0, 3, {3, 2});
}

NetworkSpec NetworkSpec::preset(const std::string& name) {
  if (name == "general") return general();
  if (name == "specific") return specific();
  if (name == "desk") return desk();
  if (name == "tiny") return tiny();
  throw ConfigError("unknown network preset '" + name + "'");
}

void NetworkSpec::validate() const {
  if (input_channels < 1) throw ConfigError("network needs at least one input channel");
  if (pad < 0) throw ConfigError("network padding must be >= 0");
  int stage = 0;  // 0 sequence layers, 1 after LSTM
  bool seen_lstm = false;
  bool prev_bn = true;  // no batch-norm directly on the raw input
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::Conv:
        if (stage != 0) throw ConfigError("convolutions must precede the recurrent layer");
        if (l.units < 1 || l.width < 1 || l.width % 2 == 0) throw ConfigError("bad convolution layer");
        prev_bn = false;
        break;
      case LayerKind::BatchNorm:
        if (stage != 0 || prev_bn) throw ConfigError("batch-norm must follow a convolution");
        prev_bn = true;
        break;
      case LayerKind::Lstm:
        if (seen_lstm) throw ConfigError("exactly one recurrent layer is supported");
        if (l.units < 1) throw ConfigError("bad recurrent layer");
        seen_lstm = true;
        stage = 1;
        break;
      case LayerKind::Dense:
        if (stage != 1) throw ConfigError("dense layers must follow the recurrent layer");
        if (l.units < 1) throw ConfigError("bad dense layer");
        break;
    }
  }
  if (!seen_lstm) throw ConfigError("network needs a recurrent layer");
  if (layers.back().kind != LayerKind::Dense || layers.back().units != 2) {
    throw ConfigError("network must end in a 2-unit dense layer");
  }
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t n = 0;
  std::size_t ch = static_cast<std::size_t>(input_channels);
  for (const auto& l : layers) {
    const std::size_t u = static_cast<std::size_t>(l.units);
    switch (l.kind) {
      case LayerKind::Conv: n += u * (ch * l.width + 1); ch = u; break;
      case LayerKind::BatchNorm: n += 2 * ch; break;
      case LayerKind::Lstm: n += 4 * u * (ch + u + 1); ch = u; break;
      case LayerKind::Dense: n += u * (ch + 1); ch = u; break;
    }
  }
  return n;
}

json to_json(const NetworkSpec& spec) {
  json layers = json::array();
  for (const auto& l : spec.layers) {
    json j = {{"kind", to_string(l.kind)}};
    if (l.kind != LayerKind::BatchNorm) j["units"] = l.units;
    if (l.kind == LayerKind::Conv) j["width"] = l.width;
    if (l.kind == LayerKind::Conv || l.kind == LayerKind::Dense) j["activation"] = to_string(l.activation);
    layers.push_back(j);
  }
  return {{"name", spec.name}, {"input_channels", spec.input_channels}, {"pad", spec.pad}, {"layers", layers}};
}

NetworkSpec network_spec_from_json(const json& j) {
  if (j.is_string()) return NetworkSpec::preset(j.get<std::string>());
  NetworkSpec s;
  try {
    s.name = j.value("name", std::string("custom"));
    s.input_channels = j.value("input_channels", 3);
    s.pad = j.value("pad", 1);
    for (const auto& l : j.at("layers")) {
      LayerSpec ls;
      ls.kind = kind_from_string(l.at("kind").get<std::string>());
      ls.units = l.value("units", 0);
      ls.width = l.value("width", 1);
      ls.activation = activation_from_string(l.value("activation", std::string("linear")));
      s.layers.push_back(ls);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad network spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace stcal::surrogate
