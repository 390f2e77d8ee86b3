#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pda/diff/graph.hpp"
#include "pda/diff/ops.hpp"
#include "pda/diff/tensor.hpp"

namespace pda::networks {

using diff::Activation;
using diff::Graph;
using diff::Tensor;
using diff::Var;

enum class Head { linear, softmax, sigmoid };

/// Fully connected network: widths[0] is the input width, widths.back() the
/// output width. Every layer but the last is followed by its hidden
/// activation; the last by the head.
struct MlpSpec {
  std::vector<std::size_t> widths;
  std::vector<Activation> hidden_activations;
  Head head = Head::linear;

  static MlpSpec uniform(std::vector<std::size_t> widths, Activation activation, Head head);

  std::size_t layers() const { return widths.size() - 1; }
  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }

  /// Throws UsageError unless there is at least one layer of positive widths.
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

struct MlpParams {
  MlpSpec spec;
  std::vector<Tensor> weights;  // layer l: widths[l] x widths[l+1]
  std::vector<Tensor> biases;   // layer l: widths[l+1]

  bool operator==(const MlpParams&) const = default;
};

/// Fan-in scaled uniform weights, zero biases. Deterministic in `seed`.
MlpParams init_network(const MlpSpec& spec, std::uint64_t seed);

/// Same shapes as init_network, every parameter zero.
MlpParams zero_network(const MlpSpec& spec);

struct BoundMlp {
  MlpSpec spec;
  std::vector<Var> weights;
  std::vector<Var> biases;
};

BoundMlp bind(Graph& graph, const MlpParams& params, bool trainable = true);
Var forward(const BoundMlp& net, Var x);

/// Feature extractor F, label classifier G_y and domain discriminator G_d.
struct ModelBundle {
  MlpParams feature;
  MlpParams classifier;
  MlpParams discriminator;

  std::size_t input_width() const { return feature.spec.input_width(); }
  std::size_t bottleneck() const { return feature.spec.output_width(); }
  std::size_t num_classes() const { return classifier.spec.output_width(); }

  /// Checks the wiring: F's output feeds G_y (softmax head) and G_d
  /// (sigmoid head, one output).
  void validate() const;

  /// Every trainable tensor, in a fixed order (F, G_y, G_d; weights before biases).
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  bool operator==(const ModelBundle&) const = default;
};

struct ModelShape {
  std::size_t input_width = 2;
  std::vector<std::size_t> feature_hidden{64};
  std::size_t bottleneck = 32;
  std::size_t num_classes = 2;
  std::vector<std::size_t> discriminator_hidden{32};
  Activation activation = Activation::relu;
};

MlpSpec feature_spec(const ModelShape& shape);
MlpSpec classifier_spec(const ModelShape& shape);
MlpSpec discriminator_spec(const ModelShape& shape);

ModelBundle make_bundle(const ModelShape& shape, std::uint64_t seed);

struct BoundBundle {
  BoundMlp feature;
  BoundMlp classifier;
  BoundMlp discriminator;
};

BoundBundle bind(Graph& graph, const ModelBundle& model, bool trainable = true);

/// Bottleneck representation F(x), batch x bottleneck.
Var extract_features(const BoundMlp& feature, Var x);
/// Class probabilities G_y(z), batch x |C_s|.
Var classify(const BoundMlp& classifier, Var z);
/// Probability of source membership G_d(R_lambda(z)), a vector of length batch.
Var discriminate(const BoundMlp& discriminator, Var z, double lambda);
/// G_d(z) without the reversal layer, so gradients are those of the forward function.
Var discriminate(const BoundMlp& discriminator, Var z);

/// Gradient-free conveniences for evaluation passes.
Tensor extract_features(const MlpParams& feature, const Tensor& x);
Tensor classify(const MlpParams& classifier, const Tensor& z);

std::string to_string(Activation activation);
std::string to_string(Head head);
Activation parse_activation(const std::string& name);
Head parse_head(const std::string& name);

}  // namespace pda::networks
