#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pda/harness/config.hpp"
#include "pda/harness/metrics.hpp"
#include "pda/trainer.hpp"

namespace pda::harness {

struct LoadedData {
  data::Dataset source;
  data::Dataset target;
  nlohmann::json manifest;
  std::vector<int> shared;
  std::vector<int> private_classes;
};

/// Generates or loads the configured datasets. A missing file raises IoError
/// naming the path.
LoadedData load_data(const ExperimentConfig& config);

struct ExperimentReport {
  std::string variant = "full";
  nlohmann::json config;
  nlohmann::json manifest;
  AccuracyMetrics accuracy;
  alignment::ClassWeights final_weights;
  WeightDiagnostics weights;
  std::vector<int> shared;
  std::vector<int> private_classes;
  double wall_clock_seconds = 0.0;
  trainer::RunHistory history;
  networks::ModelBundle model;
};

/// Everything except the history and model, which go to their own files.
nlohmann::json to_json(const ExperimentReport& report);

/// Trains on the configured data and evaluates on the target. When `out_dir`
/// is non-empty, writes report.json, manifest.json, events.json, model.json,
/// the metric CSVs and the SVG plots there.
ExperimentReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                const std::string& variant = "full");
ExperimentReport run_experiment(const std::filesystem::path& config_path, const std::filesystem::path& out_dir);

enum class Variant {
  full,
  no_adv,        // eta held at 0
  no_alignment,  // alpha = beta = gamma = 0
  no_selective,  // threshold fixed at 0
};

std::string to_string(Variant variant);
const std::vector<Variant>& all_variants();
ExperimentConfig apply_variant(ExperimentConfig config, Variant variant);

struct AblationResult {
  std::vector<ExperimentReport> reports;  // in all_variants() order
  std::string table;                      // markdown comparison
};

/// Runs the full model and the three ablations under the same seed, one
/// subdirectory per variant, plus ablation.csv/ablation.json/ablation.md.
AblationResult run_ablation(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                            bool parallel = true);

}  // namespace pda::harness
