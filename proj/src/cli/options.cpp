#include "stcal/cli/options.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "stcal/common/errors.hpp"

#ifndef STCAL_DEFAULT_CONFIG_DIR
#define STCAL_DEFAULT_CONFIG_DIR "configs"
#endif

namespace stcal::cli {

namespace fs = std::filesystem;

fs::path config_dir() {
  if (const char* env = std::getenv(kConfigDirEnv); env && *env) return env;
  return STCAL_DEFAULT_CONFIG_DIR;
}

fs::path resolve_config(const std::string& name) {
  if (name.empty()) throw ConfigError("no config given");
  if (fs::is_regular_file(name)) return name;
  for (const auto& candidate : {config_dir() / name, config_dir() / (name + ".json")}) {
    if (fs::is_regular_file(candidate)) return candidate;
  }
  throw ConfigError("config not found: " + name + " (searched " + config_dir().string() + ")");
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_overrides(nlohmann::json& j, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq);
    const std::string raw = s.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    std::stringstream path(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(path, part, '.')) parts.push_back(part);
    // Numeric parts index into existing arrays ("stages.2.lr=0.1").
    auto step = [&](nlohmann::json* node, const std::string& p) -> nlohmann::json* {
      if (node->is_array()) {
        std::size_t idx = 0;
        try {
          idx = std::stoul(p);
        } catch (const std::exception&) {
          throw ConfigError("--set " + key + ": '" + p + "' is not an array index");
        }
        if (idx >= node->size()) throw ConfigError("--set " + key + ": index " + p + " out of range");
        return &(*node)[idx];
      }
      if (node->is_null()) *node = nlohmann::json::object();
      if (!node->is_object()) throw ConfigError("--set " + key + ": '" + p + "' is not inside an object");
      return &(*node)[p];
    };
    nlohmann::json* node = &j;
    for (const auto& p : parts) node = step(node, p);
    *node = value;
  }
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("not an integer list: " + s);
    }
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

}  // namespace stcal::cli
