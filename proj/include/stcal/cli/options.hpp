#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace stcal::cli {

inline constexpr const char* kConfigDirEnv = "STCAL_CONFIG_DIR";

// Directory for bare config names: $STCAL_CONFIG_DIR, else the source tree's configs/.
std::filesystem::path config_dir();

// An existing path is used as is. Otherwise "name" or "name.json" is looked up in config_dir().
// Throws ConfigError if nothing matches.
std::filesystem::path resolve_config(const std::string& name);

nlohmann::json read_json(const std::filesystem::path& path);

// Applies "a.b.c=value" overrides. The value is parsed as JSON when possible and kept as a
// string otherwise. Intermediate objects are created as needed; numeric parts index arrays.
void apply_overrides(nlohmann::json& j, const std::vector<std::string>& sets);

// "10,20,30" -> {10, 20, 30}; throws ConfigError on junk.
std::vector<int> parse_int_list(const std::string& s);

}  // namespace stcal::cli
