#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace stcal::cli {

inline constexpr const char* kVersion = "0.1.0";

// Sidecar record of one CLI run. Artifacts are hashed when written; the timestamp is kept
// out of every hashed artifact.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config_hashes;  // label -> sha256 of the resolved JSON
  std::map<std::string, nlohmann::json> configs;     // label -> resolved JSON
  std::vector<std::filesystem::path> artifacts;

  void add_config(const std::string& label, const nlohmann::json& resolved);
  // Artifact paths are written relative to base_dir.
  nlohmann::json to_json(const std::filesystem::path& base_dir) const;
  void write(const std::filesystem::path& path) const;
};

// sha256 of the compact dump; key order is fixed by nlohmann's sorted objects.
std::string config_hash(const nlohmann::json& j);

}  // namespace stcal::cli
