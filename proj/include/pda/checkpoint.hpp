#pragma once

#include <filesystem>

#include <json.hpp>

#include "pda/networks.hpp"

namespace pda::networks {

/// Checkpoint layout (JSON, version 1):
///
///   {"format": "pda-checkpoint", "version": 1, "step": <int>,
///    "networks": {"feature": NET, "classifier": NET, "discriminator": NET}}
///
///   NET = {"widths": [..], "hidden_activations": ["relu"|"tanh", ..],
///          "head": "linear"|"softmax"|"sigmoid",
///          "weights": [layer][row][col], "biases": [layer][col]}
///
/// Doubles are written with round-trip precision.
inline constexpr int kCheckpointVersion = 1;

nlohmann::json to_json(const ModelBundle& model, long step = 0);
ModelBundle bundle_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& model, long step = 0);
ModelBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace pda::networks
