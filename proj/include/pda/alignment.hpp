#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "pda/diff/tensor.hpp"

/// Non-parametric prototype classifier and selective voting for class-importance
/// weights. Classes are the integers 0..num_classes-1; latents are matrices
/// with one row per sample.
namespace pda::alignment {

using diff::Tensor;

enum class CenterDomain { source, confident_target };

struct ClassCenters {
  CenterDomain domain = CenterDomain::source;
  std::size_t num_classes = 0;
  std::vector<int> classes;                // present classes, ascending
  std::vector<std::vector<double>> means;  // parallel to `classes`

  /// Center of class c, or nullptr if c had no samples.
  const std::vector<double>* find(int c) const;
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
};

/// Per-class mean of `latents` rows. Requested classes without samples are
/// omitted. Throws UsageError for empty latents or labels outside `classes`.
ClassCenters class_centers(const Tensor& latents, std::span<const int> labels, std::span<const int> classes,
                           std::size_t num_classes, CenterDomain domain = CenterDomain::source);
ClassCenters class_centers(const Tensor& latents, std::span<const int> labels, std::size_t num_classes,
                           CenterDomain domain = CenterDomain::source);

/// Softmax normalisation that turns a latent vector into a distribution.
std::vector<double> to_distribution(std::span<const double> z);

/// Jensen-Shannon divergence with base-2 logarithms, so the result lies in [0, 1].
double js_divergence(std::span<const double> p, std::span<const double> q);

/// Entry c is (2 - JS(dist(z), dist(center_c))) / 2, one per class of C_s.
std::vector<double> similarity(std::span<const double> z, const ClassCenters& centers);

/// softmax(similarity(z, centers)).
std::vector<double> target_probs(std::span<const double> z, const ClassCenters& centers);

/// Argmax with ties going to the lowest index.
int pseudo_label(std::span<const double> probs);

enum class ThresholdRule {
  max_probability,  // mean of max(p) over source samples
  ground_truth,     // mean of p[y_s] over source samples
};

/// Confidence threshold from the source set. `labels` is only read by the
/// ground_truth rule.
double confidence_threshold(const Tensor& source_latents, const ClassCenters& centers,
                            ThresholdRule rule = ThresholdRule::max_probability,
                            std::span<const int> labels = {});

struct ConfidentMember {
  std::size_t index = 0;  // row in the target latents
  int label = 0;          // pseudo-label
  std::vector<double> probs;
  double confidence = 0.0;
};

struct ConfidentTargetSet {
  double threshold = 0.0;
  std::size_t num_classes = 0;
  std::size_t candidates = 0;  // number of targets considered
  std::vector<ConfidentMember> members;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
  /// Pseudo-label per target row, -1 for rows outside the set.
  std::vector<int> label_lookup() const;
  /// Classes carrying at least one pseudo-label, ascending.
  std::vector<int> label_set() const;
};

/// Targets whose confidence max(p_t) is at least `threshold` (in [0, 1]).
ConfidentTargetSet select_confident(const Tensor& target_latents, const ClassCenters& centers, double threshold);

struct ClassWeights {
  std::vector<double> values;

  static ClassWeights ones(std::size_t num_classes);
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t c) const { return values[c]; }
  bool operator==(const ClassWeights&) const = default;
};

/// Mean member probability vector rescaled so its largest entry is 1.
/// An empty set leaves `previous` unchanged.
ClassWeights class_weights(const ConfidentTargetSet& confident, const ClassWeights& previous);

/// Sum of member probability vectors per class.
std::vector<double> vote_mass(const ConfidentTargetSet& confident);

/// {threshold, confident, weights, vote_mass} record for one update event.
nlohmann::json diagnostic_record(const ConfidentTargetSet& confident, const ClassWeights& weights);

}  // namespace pda::alignment
