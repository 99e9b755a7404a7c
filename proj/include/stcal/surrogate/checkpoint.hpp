#pragma once

#include <filesystem>

#include <json.hpp>

#include "stcal/surrogate/network.hpp"
#include "stcal/surrogate/train.hpp"

namespace stcal::surrogate {

inline constexpr int kCheckpointVersion = 1;

// {version, spec, normalization, parameters: [{name, shape, data}], batch_norm: [...],
//  training: {...}}. Parameter data is stored column-major with full round-trip precision.
nlohmann::json checkpoint_to_json(const Model& model, const nlohmann::json& training = nlohmann::json::object());
Model model_from_checkpoint(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const nlohmann::json& training = nlohmann::json::object());
Model load_checkpoint(const std::filesystem::path& path, nlohmann::json* training = nullptr);

nlohmann::json history_to_json(const std::vector<EpochRecord>& history);

}  // namespace stcal::surrogate
