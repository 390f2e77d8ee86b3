#include "pda/harness/checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pda/alignment.hpp"
#include "pda/diff/gradcheck.hpp"
#include "pda/losses.hpp"
#include "pda/networks.hpp"
#include "pda/oracle.hpp"

namespace pda::harness {
namespace {

using diff::Graph;
using diff::Tensor;
using diff::Var;

Tensor random_tensor(diff::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = gauss(rng);
  return t;
}

std::vector<int> random_labels(std::size_t n, int classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::vector<int> out(n);
  for (auto& y : out) y = pick(rng);
  // First entries cover the classes so every term is exercised.
  for (std::size_t i = 0; i < std::min<std::size_t>(n, static_cast<std::size_t>(classes)); ++i) {
    out[i] = static_cast<int>(i);
  }
  return out;
}

alignment::ClassWeights random_weights(std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  alignment::ClassWeights w{std::vector<double>(k)};
  for (double& v : w.values) v = u(rng);
  return w;
}

networks::BoundBundle bind_vars(const networks::ModelBundle& model, std::span<const Var> vars) {
  networks::BoundBundle out{{model.feature.spec, {}, {}},
                            {model.classifier.spec, {}, {}},
                            {model.discriminator.spec, {}, {}}};
  std::size_t k = 0;
  for (networks::BoundMlp* net : {&out.feature, &out.classifier, &out.discriminator}) {
    for (std::size_t l = 0; l < net->spec.layers(); ++l) {
      net->weights.push_back(vars[k++]);
      net->biases.push_back(vars[k++]);
    }
  }
  return out;
}

}  // namespace

std::vector<GradCheckOutcome> run_gradient_suite(std::size_t trials, std::uint64_t seed, double eps) {
  std::mt19937_64 rng(seed);
  std::vector<GradCheckOutcome> out{{"l_class", trials, 0.0}, {"l_adv", trials, 0.0}, {"l_bc", trials, 0.0},
                                    {"l_wc", trials, 0.0},    {"l_em", trials, 0.0},  {"total", trials, 0.0}};
  const auto record = [&out](std::size_t i, double err) { out[i].max_error = std::max(out[i].max_error, err); };

  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t k = 3 + trial % 3;
    const std::size_t n = 6 + trial % 5;
    const std::size_t b = 4;
    const auto labels = random_labels(n, static_cast<int>(k), rng);
    const auto weights = random_weights(k, rng);

    {
      const std::vector<Tensor> theta{random_tensor({n, k}, rng, 2.0)};
      record(0, diff::finite_diff_check(
                    [&](Graph&, std::span<const Var> p) {
                      return losses::classification_loss(diff::softmax(p[0]), labels, weights);
                    },
                    theta, eps));
    }
    {
      const std::vector<Tensor> theta{random_tensor({n}, rng, 2.0), random_tensor({n + 2}, rng, 2.0)};
      const auto form = trial % 2 ? losses::AdvTargetForm::printed : losses::AdvTargetForm::bce;
      record(1, diff::finite_diff_check(
                    [&](Graph&, std::span<const Var> p) {
                      return losses::adversarial_loss(diff::sigmoid(p[0]), diff::sigmoid(p[1]), labels, weights, form);
                    },
                    theta, eps));
    }
    {
      const std::size_t m = 5;
      const auto target_labels = random_labels(m, static_cast<int>(k) - 1, rng);
      const std::vector<Tensor> theta{random_tensor({n, b}, rng), random_tensor({m, b}, rng)};
      std::uniform_real_distribution<double> u(0.1, 1.0);
      const double alpha = u(rng), beta = u(rng);
      record(2, diff::finite_diff_check(
                    [&](Graph& g, std::span<const Var> p) {
                      return losses::between_class_loss(g, losses::batch_centers(p[0], labels),
                                                        losses::batch_centers(p[1], target_labels), alpha, beta);
                    },
                    theta, eps));
    }
    {
      const std::vector<Tensor> theta{random_tensor({n, b}, rng)};
      record(3, diff::finite_diff_check(
                    [&](Graph& g, std::span<const Var> p) { return losses::within_class_loss(g, p[0], labels, k); },
                    theta, eps));
    }
    {
      const std::vector<Tensor> theta{random_tensor({n, k}, rng, 2.0)};
      record(4, diff::finite_diff_check(
                    [&](Graph&, std::span<const Var> p) { return losses::entropy_loss(diff::softmax(p[0])); }, theta,
                    eps));
    }
    {
      networks::ModelShape shape;
      shape.input_width = 3;
      shape.feature_hidden = {6};
      shape.bottleneck = b;
      shape.num_classes = k;
      shape.discriminator_hidden = {4};
      shape.activation = networks::Activation::tanh;
      const auto model = networks::make_bundle(shape, seed + trial);
      std::vector<Tensor> theta;
      for (const Tensor* t : model.parameters()) theta.push_back(*t);

      losses::BatchInputs batch{random_tensor({5, 3}, rng), random_labels(5, static_cast<int>(k), rng),
                                random_tensor({5, 3}, rng), {}};
      batch.target_pseudo = {0, -1, 1, 0, -1};
      std::uniform_real_distribution<double> u(0.1, 1.0);
      const losses::HyperParams hyper{u(rng), u(rng), u(rng), u(rng)};
      record(5, diff::finite_diff_check(
                    [&](Graph& g, std::span<const Var> p) {
                      return losses::total_objective(g, batch, bind_vars(model, p), weights, hyper,
                                                     losses::AdvTargetForm::bce, losses::GradientFlow::exact)
                          .total;
                    },
                    theta, eps));
    }
  }
  return out;
}

OracleOutcome run_oracle_suite(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.5);
  OracleOutcome outcome;
  outcome.instances = instances;
  const auto diff_into = [&outcome](double a, double b) {
    outcome.max_abs_diff = std::max(outcome.max_abs_diff, std::abs(a - b));
  };

  for (std::size_t inst = 0; inst < instances; ++inst) {
    const std::size_t k = 2 + rng() % 4;           // 2..5 classes
    const std::size_t ns = k + rng() % (21 - k);   // k..20 source samples
    const std::size_t nt = 1 + rng() % 20;         // 1..20 target samples
    const std::size_t dim = 2 + rng() % 5;
    const bool zero_threshold = inst % 4 == 3;

    oracle::Instance in;
    in.num_classes = k;
    for (std::size_t i = 0; i < ns; ++i) {
      std::vector<double> row(dim);
      for (double& v : row) v = gauss(rng);
      in.source.push_back(row);
      in.source_labels.push_back(i < k ? static_cast<int>(i) : static_cast<int>(rng() % k));
    }
    for (std::size_t i = 0; i < nt; ++i) {
      std::vector<double> row(dim);
      for (double& v : row) v = gauss(rng);
      in.target.push_back(row);
    }
    in.previous_weights.assign(k, 1.0);
    const oracle::Expected expected = oracle::recompute(in, zero_threshold);

    const Tensor source = Tensor::from_rows(in.source);
    const Tensor target = Tensor::from_rows(in.target);
    const auto centers = alignment::class_centers(source, in.source_labels, k);
    for (std::size_t c = 0; c < k; ++c) {
      const auto* mu = centers.find(static_cast<int>(c));
      for (std::size_t j = 0; j < dim; ++j) diff_into((*mu)[j], expected.centers[c][j]);
    }
    const double threshold = zero_threshold ? 0.0 : alignment::confidence_threshold(source, centers);
    diff_into(threshold, expected.threshold);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto phi = alignment::similarity(target.row(t), centers);
      const auto p = alignment::target_probs(target.row(t), centers);
      for (std::size_t c = 0; c < k; ++c) {
        diff_into(phi[c], expected.target_similarity[t][c]);
        diff_into(p[c], expected.target_probs[t][c]);
      }
      if (alignment::pseudo_label(p) != expected.pseudo_labels[t]) ++outcome.label_mismatches;
    }
    const auto confident = alignment::select_confident(target, centers, threshold);
    std::vector<std::size_t> members;
    for (const auto& m : confident.members) {
      members.push_back(m.index);
      if (m.label != expected.pseudo_labels[m.index]) ++outcome.label_mismatches;
    }
    if (members != expected.confident) ++outcome.membership_mismatches;
    const auto weights = alignment::class_weights(confident, alignment::ClassWeights{in.previous_weights});
    if (weights.size() != expected.weights.size()) {
      ++outcome.membership_mismatches;
    } else {
      for (std::size_t c = 0; c < k; ++c) diff_into(weights[c], expected.weights[c]);
    }
  }
  return outcome;
}

}  // namespace pda::harness
