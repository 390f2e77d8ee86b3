#include "pda/harness/metrics.hpp"

#include <algorithm>
#include <set>

#include "pda/errors.hpp"

namespace pda::harness {

std::vector<int> predict(const networks::ModelBundle& model, const diff::Tensor& features) {
  const diff::Tensor probs = networks::classify(model.classifier, networks::extract_features(model.feature, features));
  std::vector<int> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) out[i] = alignment::pseudo_label(probs.row(i));
  return out;
}

AccuracyMetrics score_predictions(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw DimensionError("score_predictions: length mismatch");
  AccuracyMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0) throw UsageError("evaluation needs ground-truth labels for every sample");
    auto& cls = m.per_class[truth[i]];
    ++cls.total;
    ++m.total;
    if (predicted[i] == truth[i]) {
      ++cls.correct;
      ++m.correct;
    }
  }
  m.accuracy = m.total ? static_cast<double>(m.correct) / static_cast<double>(m.total) : 0.0;
  return m;
}

AccuracyMetrics evaluate(const networks::ModelBundle& model, const data::Dataset& dataset) {
  if (!dataset.has_evaluation_labels()) throw UsageError("evaluate: dataset has missing labels");
  if (dataset.empty()) throw UsageError("evaluate: empty dataset");
  return score_predictions(predict(model, dataset.features()), dataset.evaluation_labels());
}

WeightDiagnostics weight_diagnostics(const alignment::ClassWeights& weights, std::span<const int> shared,
                                     std::span<const int> private_classes) {
  if (shared.empty()) throw UsageError("weight_diagnostics: shared class set is empty");
  std::set<int> seen;
  const auto mean_over = [&](std::span<const int> classes) {
    double total = 0.0;
    for (int c : classes) {
      if (c < 0 || static_cast<std::size_t>(c) >= weights.size()) {
        throw UsageError("weight_diagnostics: class " + std::to_string(c) + " outside C_s");
      }
      if (!seen.insert(c).second) throw UsageError("weight_diagnostics: shared and private sets overlap");
      total += weights[static_cast<std::size_t>(c)];
    }
    return total / static_cast<double>(classes.size());
  };
  WeightDiagnostics d;
  d.mean_shared = mean_over(shared);
  if (!private_classes.empty()) {
    d.mean_private = mean_over(private_classes);
    d.ratio = *d.mean_private / d.mean_shared;
  }
  if (seen.size() != weights.size()) throw UsageError("weight_diagnostics: shared and private must cover C_s");
  return d;
}

}  // namespace pda::harness
