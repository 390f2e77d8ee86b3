#include "pda/networks.hpp"

#include <cmath>
#include <random>

#include "pda/errors.hpp"

namespace pda::networks {
namespace {

// splitmix64 finaliser; decorrelates the per-network seeds of a bundle.
std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_input_width(const MlpSpec& spec, Var x, const char* who) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2 || xv.cols() != spec.input_width()) {
    throw DimensionError(std::string(who) + ": expected input of width " + std::to_string(spec.input_width()) +
                         ", got shape " + diff::shape_string(xv.shape()));
  }
}

}  // namespace

MlpSpec MlpSpec::uniform(std::vector<std::size_t> widths, Activation activation, Head head) {
  MlpSpec spec;
  const std::size_t hidden = widths.size() >= 2 ? widths.size() - 2 : 0;
  spec.widths = std::move(widths);
  spec.hidden_activations.assign(hidden, activation);
  spec.head = head;
  return spec;
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw UsageError("MlpSpec needs at least one layer");
  for (std::size_t w : widths) {
    if (w == 0) throw UsageError("MlpSpec widths must be positive");
  }
  if (hidden_activations.size() != widths.size() - 2) {
    throw UsageError("MlpSpec needs one activation per hidden layer");
  }
}

MlpParams zero_network(const MlpSpec& spec) {
  spec.validate();
  MlpParams params{spec, {}, {}};
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    params.weights.emplace_back(diff::Shape{spec.widths[l], spec.widths[l + 1]});
    params.biases.emplace_back(diff::Shape{spec.widths[l + 1]});
  }
  return params;
}

MlpParams init_network(const MlpSpec& spec, std::uint64_t seed) {
  MlpParams params = zero_network(spec);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(spec.widths[l]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : params.weights[l].values()) w = dist(rng);
  }
  return params;
}

BoundMlp bind(Graph& graph, const MlpParams& params, bool trainable) {
  BoundMlp net{params.spec, {}, {}};
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    net.weights.push_back(graph.leaf(params.weights[l], trainable));
    net.biases.push_back(graph.leaf(params.biases[l], trainable));
  }
  return net;
}

Var forward(const BoundMlp& net, Var x) {
  check_input_width(net.spec, x, "forward");
  Var h = x;
  const std::size_t last = net.weights.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    h = diff::affine(h, net.weights[l], net.biases[l]);
    if (l < last) {
      h = diff::activation(h, net.spec.hidden_activations[l]);
    }
  }
  switch (net.spec.head) {
    case Head::linear:
      return h;
    case Head::softmax:
      return diff::softmax(h);
    case Head::sigmoid:
      return diff::sigmoid(h);
  }
  return h;
}

void ModelBundle::validate() const {
  feature.spec.validate();
  classifier.spec.validate();
  discriminator.spec.validate();
  if (classifier.spec.input_width() != bottleneck() || discriminator.spec.input_width() != bottleneck()) {
    throw UsageError("classifier and discriminator must consume the bottleneck width");
  }
  if (classifier.spec.head != Head::softmax) throw UsageError("classifier needs a softmax head");
  if (discriminator.spec.head != Head::sigmoid || discriminator.spec.output_width() != 1) {
    throw UsageError("discriminator needs a single sigmoid output");
  }
}

std::vector<Tensor*> ModelBundle::parameters() {
  std::vector<Tensor*> out;
  for (MlpParams* net : {&feature, &classifier, &discriminator}) {
    for (std::size_t l = 0; l < net->weights.size(); ++l) {
      out.push_back(&net->weights[l]);
      out.push_back(&net->biases[l]);
    }
  }
  return out;
}

std::vector<const Tensor*> ModelBundle::parameters() const {
  std::vector<const Tensor*> out;
  for (const MlpParams* net : {&feature, &classifier, &discriminator}) {
    for (std::size_t l = 0; l < net->weights.size(); ++l) {
      out.push_back(&net->weights[l]);
      out.push_back(&net->biases[l]);
    }
  }
  return out;
}

MlpSpec feature_spec(const ModelShape& shape) {
  std::vector<std::size_t> widths{shape.input_width};
  widths.insert(widths.end(), shape.feature_hidden.begin(), shape.feature_hidden.end());
  widths.push_back(shape.bottleneck);
  return MlpSpec::uniform(std::move(widths), shape.activation, Head::linear);
}

MlpSpec classifier_spec(const ModelShape& shape) {
  return MlpSpec::uniform({shape.bottleneck, shape.num_classes}, shape.activation, Head::softmax);
}

MlpSpec discriminator_spec(const ModelShape& shape) {
  std::vector<std::size_t> widths{shape.bottleneck};
  widths.insert(widths.end(), shape.discriminator_hidden.begin(), shape.discriminator_hidden.end());
  widths.push_back(1);
  return MlpSpec::uniform(std::move(widths), shape.activation, Head::sigmoid);
}

ModelBundle make_bundle(const ModelShape& shape, std::uint64_t seed) {
  ModelBundle model{init_network(feature_spec(shape), mix_seed(seed)),
                    init_network(classifier_spec(shape), mix_seed(seed + 1)),
                    init_network(discriminator_spec(shape), mix_seed(seed + 2))};
  model.validate();
  return model;
}

BoundBundle bind(Graph& graph, const ModelBundle& model, bool trainable) {
  return {bind(graph, model.feature, trainable), bind(graph, model.classifier, trainable),
          bind(graph, model.discriminator, trainable)};
}

Var extract_features(const BoundMlp& feature, Var x) { return forward(feature, x); }

Var classify(const BoundMlp& classifier, Var z) { return forward(classifier, z); }

Var discriminate(const BoundMlp& discriminator, Var z, double lambda) {
  return discriminate(discriminator, diff::reverse_gradient(z, lambda));
}

Var discriminate(const BoundMlp& discriminator, Var z) {
  const Var out = forward(discriminator, z);
  return diff::reshape(out, {out.value().rows()});
}

Tensor extract_features(const MlpParams& feature, const Tensor& x) {
  Graph graph;
  const BoundMlp net = bind(graph, feature, false);
  return forward(net, graph.constant(x)).value();
}

Tensor classify(const MlpParams& classifier, const Tensor& z) {
  Graph graph;
  const BoundMlp net = bind(graph, classifier, false);
  return forward(net, graph.constant(z)).value();
}

std::string to_string(Activation activation) { return activation == Activation::relu ? "relu" : "tanh"; }

std::string to_string(Head head) {
  switch (head) {
    case Head::linear:
      return "linear";
    case Head::softmax:
      return "softmax";
    case Head::sigmoid:
      return "sigmoid";
  }
  return "linear";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw UsageError("unknown activation '" + name + "'");
}

Head parse_head(const std::string& name) {
  if (name == "linear") return Head::linear;
  if (name == "softmax") return Head::softmax;
  if (name == "sigmoid") return Head::sigmoid;
  throw UsageError("unknown head '" + name + "'");
}

}  // namespace pda::networks
