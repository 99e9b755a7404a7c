#include "stcal/surrogate/checkpoint.hpp"

#include <fstream>

#include "stcal/common/errors.hpp"

namespace stcal::surrogate {

using nlohmann::json;

namespace {

std::vector<double> flat(const Eigen::MatrixXd& m) { return {m.data(), m.data() + m.size()}; }

Eigen::MatrixXd unflat(const std::vector<double>& v, Eigen::Index r, Eigen::Index c) {
  if (static_cast<Eigen::Index>(v.size()) != r * c) throw ConfigError("checkpoint tensor size does not match its shape");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), r, c);
}

}  // namespace

json history_to_json(const std::vector<EpochRecord>& history) {
  json h = json::array();
  for (const auto& e : history) {
    h.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_loss", e.validation_loss}, {"lr", e.lr}});
  }
  return h;
}

json checkpoint_to_json(const Model& model, const json& training) {
  json params = json::array();
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    params.push_back({{"name", model.names[i]},
                      {"shape", {model.params[i].rows(), model.params[i].cols()}},
                      {"data", flat(model.params[i])}});
  }
  json bn = json::array();
  for (const auto& s : model.bn) {
    bn.push_back({{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
                  {"var", std::vector<double>(s.var.data(), s.var.data() + s.var.size())}});
  }
  return {{"version", kCheckpointVersion},
          {"spec", to_json(model.spec)},
          {"normalization", to_json(model.norm)},
          {"parameter_count", model.parameter_count()},
          {"parameters", params},
          {"batch_norm", bn},
          {"training", training}};
}

Model model_from_checkpoint(const json& j) {
  if (!j.contains("version")) throw ConfigError("checkpoint has no version field");
  if (j.at("version").get<int>() != kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
  Model m;
  try {
    m.spec = network_spec_from_json(j.at("spec"));
    m.norm = normalization_from_json(j.at("normalization"));
    for (const auto& p : j.at("parameters")) {
      const auto shape = p.at("shape").get<std::vector<Eigen::Index>>();
      if (shape.size() != 2) throw ConfigError("checkpoint tensors must be 2-D");
      m.names.push_back(p.at("name").get<std::string>());
      m.params.push_back(unflat(p.at("data").get<std::vector<double>>(), shape[0], shape[1]));
    }
    for (const auto& s : j.at("batch_norm")) {
      const auto mean = s.at("mean").get<std::vector<double>>();
      const auto var = s.at("var").get<std::vector<double>>();
      m.bn.push_back({Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size()),
                      Eigen::Map<const Eigen::VectorXd>(var.data(), var.size())});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad checkpoint: ") + e.what());
  }
  for (const auto& p : m.params) {
    if (!p.allFinite()) throw ConfigError("checkpoint contains non-finite parameters");
  }
  Network<double> check(m);  // shape validation
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const json& training) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(model, training).dump() << '\n';
  if (!out) throw ConfigError("write failed for " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path, json* training) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse checkpoint " + path.string() + ": " + e.what());
  }
  if (training) *training = j.value("training", json::object());
  return model_from_checkpoint(j);
}

}  // namespace stcal::surrogate
