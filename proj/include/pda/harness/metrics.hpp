#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "pda/alignment.hpp"
#include "pda/data.hpp"
#include "pda/networks.hpp"

namespace pda::harness {

struct ClassAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct AccuracyMetrics {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::map<int, ClassAccuracy> per_class;
};

/// Argmax of G_y(F(x)) against the evaluation labels. Throws UsageError if
/// any label is missing.
AccuracyMetrics evaluate(const networks::ModelBundle& model, const data::Dataset& dataset);

/// Accuracy of precomputed predictions.
AccuracyMetrics score_predictions(std::span<const int> predicted, std::span<const int> truth);

std::vector<int> predict(const networks::ModelBundle& model, const diff::Tensor& features);

struct WeightDiagnostics {
  double mean_shared = 0.0;
  std::optional<double> mean_private;
  std::optional<double> ratio;  // mean_private / mean_shared
};

/// Means of W over the shared and private partitions of C_s.
WeightDiagnostics weight_diagnostics(const alignment::ClassWeights& weights, std::span<const int> shared,
                                     std::span<const int> private_classes);

}  // namespace pda::harness
