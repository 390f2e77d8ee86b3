#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pda/diff/tensor.hpp"

namespace pda::data {

using diff::Tensor;

enum class Domain { source, target };

std::string to_string(Domain domain);

struct Sample {
  std::vector<double> features;
  int label = -1;
  Domain domain = Domain::source;
};

/// Immutable domain-tagged feature matrix with labels. Target labels are kept
/// for evaluation only: labels() refuses to hand them out, so the trainer
/// cannot read them.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Domain domain, Tensor features, std::vector<int> labels);

  Domain domain() const noexcept { return domain_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return labels_.empty(); }

  const Tensor& features() const noexcept { return features_; }
  Tensor rows(std::span<const std::size_t> index) const;
  Sample sample(std::size_t i) const;

  /// Training labels. Throws UsageError on a target dataset.
  std::span<const int> labels() const;
  std::vector<int> labels_at(std::span<const std::size_t> index) const;

  /// Ground truth for evaluation (-1 marks a missing label).
  std::span<const int> evaluation_labels() const noexcept { return labels_; }
  bool has_evaluation_labels() const noexcept;

  /// Sorted distinct labels (ignoring missing ones).
  std::vector<int> classes() const;

  /// Copy with the label column replaced.
  Dataset with_labels(std::vector<int> labels) const;

 private:
  Domain domain_ = Domain::source;
  std::size_t dim_ = 0;
  Tensor features_{diff::Shape{0, 0}};
  std::vector<int> labels_;
};

/// Two-domain partial task: Gaussian blobs on a circle in the first two
/// coordinates (the remaining ones carry only noise); targets come from the
/// shared classes and are rotated, translated and perturbed.
struct PartialTaskSpec {
  std::size_t num_source_classes = 5;
  std::vector<int> target_classes{0, 1, 2};
  std::size_t samples_per_class = 100;
  std::size_t dim = 4;
  double radius = 3.0;
  double cluster_std = 0.8;
  double rotation_deg = 30.0;
  std::vector<double> translation;  // empty means zero; otherwise at most `dim` entries
  double noise = 0.1;
  std::uint64_t seed = 0;

  /// Throws UsageError unless C_t is a non-empty subset of C_s and the shapes are sane.
  void validate() const;
  std::vector<int> shared_classes() const;
  std::vector<int> private_classes() const;
};

/// Mean of source class c before any shift.
std::vector<double> class_center(const PartialTaskSpec& spec, int c);
/// Rotation in the (x0, x1) plane followed by translation; no noise.
std::vector<double> apply_shift(const PartialTaskSpec& spec, std::span<const double> x);

struct DomainPair {
  Dataset source;
  Dataset target;
};

DomainPair generate_synthetic(const PartialTaskSpec& spec);

nlohmann::json manifest(const PartialTaskSpec& spec);
PartialTaskSpec spec_from_manifest(const nlohmann::json& doc);

/// Header `f0,...,f{d-1},label`; features written with 17 significant digits.
void write_csv(const std::filesystem::path& path, const Dataset& dataset);
/// Parses a CSV dataset. An empty label cell marks a missing label.
/// Throws IoError if the file is unreadable and ParseError on malformed content.
Dataset load_csv(const std::filesystem::path& path, Domain role);

/// Epoch-wise shuffled index batches, without replacement inside an epoch.
/// The last batch of an epoch may be short.
class BatchSampler {
 public:
  BatchSampler(std::size_t dataset_size, std::uint64_t seed);

  std::vector<std::size_t> next(std::size_t batch_size);
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  void reshuffle();

  std::size_t size_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

}  // namespace pda::data
