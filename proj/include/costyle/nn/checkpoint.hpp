#pragma once

#include <filesystem>

#include <json.hpp>

#include "costyle/nn/adamw.hpp"
#include "costyle/nn/mlp.hpp"

namespace costyle::nn {

inline constexpr int kCheckpointSchemaVersion = 1;

/// Network checkpoint document:
/// {schema_version, layer_dims, hidden_activation, leaky_slope,
///  output_activation, weights, biases, optimizer_state?}
/// Doubles round-trip exactly through the JSON layer.
nlohmann::json mlp_to_json(const MlpParams& params,
                           const AdamWState* optimizer = nullptr);
MlpParams mlp_from_json(const nlohmann::json& doc,
                        AdamWState* optimizer = nullptr);

void save_json(const nlohmann::json& doc, const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace costyle::nn
