#include "stcal/cli/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "stcal/common/errors.hpp"
#include "stcal/common/hash.hpp"

namespace stcal::cli {

std::string config_hash(const nlohmann::json& j) { return sha256_hex(j.dump()); }

void RunManifest::add_config(const std::string& label, const nlohmann::json& resolved) {
  config_hashes[label] = config_hash(resolved);
  configs[label] = resolved;
}

nlohmann::json RunManifest::to_json(const std::filesystem::path& base_dir) const {
  nlohmann::json arts = nlohmann::json::array();
  for (const auto& a : artifacts) {
    arts.push_back({{"path", a.lexically_proximate(base_dir).generic_string()}, {"sha256", sha256_file(a)}});
  }
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return {{"command", command},     {"args", args},         {"seed", seed},
          {"config_hashes", config_hashes}, {"configs", configs}, {"artifacts", arts},
          {"version", kVersion},    {"timestamp", stamp}};
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write manifest " + path.string());
  out << to_json(path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path()).dump(2) << '\n';
}

}  // namespace stcal::cli
