#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "pda/data.hpp"
#include "pda/trainer.hpp"

namespace pda::harness {

struct DataConfig {
  enum class Kind { synthetic, csv };
  Kind kind = Kind::synthetic;
  data::PartialTaskSpec synthetic;
  /// Set when the data section pins its own seed; otherwise the run seed is used.
  std::optional<std::uint64_t> seed;
  std::filesystem::path source_csv;
  std::filesystem::path target_csv;
  std::filesystem::path manifest;  // optional for csv data
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  trainer::TrainConfig train;
};

/// Strict parse: unknown keys and wrongly typed values raise SchemaError
/// naming the key. Relative dataset paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration, in the same layout parse_config accepts.
nlohmann::json to_json(const ExperimentConfig& config);

/// Replaces the run seed (and the trainer seed that follows it).
void override_seed(ExperimentConfig& config, std::uint64_t seed);

}  // namespace pda::harness
