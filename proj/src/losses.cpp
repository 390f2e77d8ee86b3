#include "pda/losses.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "pda/errors.hpp"

namespace pda::losses {
namespace {

using diff::Tensor;

Var zero(Graph& graph) { return graph.constant(Tensor::scalar(0.0)); }

Var weight_vector(Graph& graph, std::span<const int> labels, const ClassWeights& weights) {
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= weights.size()) {
      throw UsageError("label " + std::to_string(labels[i]) + " outside the source class set");
    }
    w[i] = weights[static_cast<std::size_t>(labels[i])];
  }
  return graph.constant(Tensor::vector(std::move(w)));
}

// Sum over ordered pairs (c, c') with c != c' of ||a_c - b_c'||, where both
// sides range over `classes`. Pairs without a center on either side are skipped.
std::optional<Var> ordered_pair_distance_sum(const CenterVars& a, const CenterVars& b, const std::vector<int>& classes) {
  std::optional<Var> total;
  for (int c : classes) {
    const Var* left = a.find(c);
    if (!left) continue;
    for (int c2 : classes) {
      if (c2 == c) continue;
      const Var* right = b.find(c2);
      if (!right) continue;
      const Var d = diff::l2_norm(*left - *right);
      total = total ? *total + d : d;
    }
  }
  return total;
}

}  // namespace

std::string to_string(AdvTargetForm form) { return form == AdvTargetForm::bce ? "bce" : "printed"; }

AdvTargetForm parse_adv_target_form(const std::string& name) {
  if (name == "bce") return AdvTargetForm::bce;
  if (name == "printed") return AdvTargetForm::printed;
  throw UsageError("unknown adversarial target form '" + name + "'");
}

const Var* CenterVars::find(int c) const {
  const auto it = std::lower_bound(classes.begin(), classes.end(), c);
  if (it == classes.end() || *it != c) return nullptr;
  return &means[static_cast<std::size_t>(it - classes.begin())];
}

CenterVars batch_centers(Var latents, std::span<const int> labels) {
  if (labels.size() != latents.value().rows()) throw DimensionError("batch_centers: one label per row required");
  std::map<int, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) rows[labels[i]].push_back(i);
  CenterVars centers;
  for (const auto& [c, idx] : rows) {
    centers.classes.push_back(c);
    centers.means.push_back(diff::mean_rows(diff::gather_rows(latents, idx)));
  }
  return centers;
}

Var classification_loss(Var probs_s, std::span<const int> y_s, const ClassWeights& weights) {
  const Tensor& p = probs_s.value();
  if (p.rank() != 2 || p.rows() != y_s.size()) throw DimensionError("classification_loss: rows must align with labels");
  if (p.cols() != weights.size()) throw DimensionError("classification_loss: weight vector length != class count");
  Graph& graph = *probs_s.graph;
  const Var w = weight_vector(graph, y_s, weights);
  const Var log_true = diff::log(diff::pick(probs_s, y_s));
  return -diff::mean(w * log_true);
}

Var adversarial_loss(Var d_s, Var d_t, std::span<const int> y_s, const ClassWeights& weights, AdvTargetForm form) {
  if (d_s.value().rank() != 1 || d_s.value().size() != y_s.size()) {
    throw DimensionError("adversarial_loss: one source probability per label required");
  }
  if (d_t.value().rank() != 1) throw DimensionError("adversarial_loss: target probabilities must be a vector");
  Graph& graph = *d_s.graph;
  const Var w = weight_vector(graph, y_s, weights);
  const Var source_term = -diff::mean(w * diff::log(d_s));
  Var target_term;
  if (form == AdvTargetForm::bce) {
    target_term = -diff::mean(diff::log(diff::add_scalar(-d_t, 1.0)));
  } else {
    target_term = -diff::mean(diff::add_scalar(-diff::log(d_t), 1.0));
  }
  return source_term + target_term;
}

Var between_class_loss(Graph& graph, const CenterVars& source, const CenterVars& target, double alpha, double beta) {
  std::optional<Var> inner;
  const auto add_term = [&inner](Var term, double coeff) {
    const Var scaled = term * coeff;
    inner = inner ? *inner + scaled : scaled;
  };

  const auto normaliser = [](std::size_t n) { return 1.0 / static_cast<double>(n * (n - 1)); };
  if (source.size() >= 2) {
    if (auto s = ordered_pair_distance_sum(source, source, source.classes)) add_term(*s, alpha * normaliser(source.size()));
  }
  if (target.size() >= 2) {
    if (auto t = ordered_pair_distance_sum(target, target, target.classes)) add_term(*t, alpha * normaliser(target.size()));
    if (auto x = ordered_pair_distance_sum(source, target, target.classes)) add_term(*x, beta * normaliser(target.size()));
  }
  return inner ? -*inner : zero(graph);
}

Var within_class_loss(Graph& graph, Var latents, std::span<const int> labels, std::size_t num_classes) {
  if (labels.size() != latents.value().rows()) throw DimensionError("within_class_loss: one label per row required");
  if (num_classes == 0) throw UsageError("within_class_loss: empty class set");
  std::vector<std::vector<std::size_t>> rows(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw UsageError("within_class_loss: label " + std::to_string(labels[i]) + " outside the class set");
    }
    rows[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::optional<Var> total;
  for (const auto& idx : rows) {
    const std::size_t n = idx.size();
    if (n < 2) continue;
    const Var term = diff::sum_pairwise_sq_dist(diff::gather_rows(latents, idx)) * (1.0 / static_cast<double>(n * (n - 1)));
    total = total ? *total + term : term;
  }
  return total ? *total * (1.0 / static_cast<double>(num_classes)) : zero(graph);
}

Var entropy_loss(Var probs_t) {
  const Tensor& p = probs_t.value();
  if (p.rank() != 2 || p.rows() == 0) throw DimensionError("entropy_loss: expected a non-empty probability matrix");
  return diff::sum(probs_t * diff::log(probs_t)) * (-1.0 / static_cast<double>(p.rows()));
}

Objective total_objective(Graph& graph, const BatchInputs& batch, const networks::BoundBundle& model,
                          const ClassWeights& weights, const HyperParams& hyper, AdvTargetForm form, GradientFlow flow) {
  if (batch.target_pseudo.size() != batch.target_x.rows()) {
    throw DimensionError("total_objective: one pseudo-label slot per target row required");
  }
  const std::size_t num_classes = model.classifier.spec.output_width();
  if (weights.size() != num_classes) throw DimensionError("total_objective: weight vector length != class count");

  const Var zs = networks::extract_features(model.feature, graph.constant(batch.source_x));
  const Var zt = networks::extract_features(model.feature, graph.constant(batch.target_x));
  const Var ps = networks::classify(model.classifier, zs);
  const Var pt = networks::classify(model.classifier, zt);
  const auto discriminate = [&](Var z) {
    return flow == GradientFlow::reversed ? networks::discriminate(model.discriminator, z, hyper.eta)
                                          : networks::discriminate(model.discriminator, z);
  };
  const Var ds = discriminate(zs);
  const Var dt = discriminate(zt);

  std::vector<std::size_t> confident_rows;
  std::vector<int> confident_labels;
  for (std::size_t i = 0; i < batch.target_pseudo.size(); ++i) {
    if (batch.target_pseudo[i] >= 0) {
      confident_rows.push_back(i);
      confident_labels.push_back(batch.target_pseudo[i]);
    }
  }

  const Var l_class = classification_loss(ps, batch.source_y, weights);
  const Var l_adv = adversarial_loss(ds, dt, batch.source_y, weights, form);

  Var pooled = zs;
  std::vector<int> pooled_labels = batch.source_y;
  CenterVars target_centers;
  if (!confident_rows.empty()) {
    const Var zT = diff::gather_rows(zt, confident_rows);
    target_centers = batch_centers(zT, confident_labels);
    pooled = diff::concat_rows(zs, zT);
    pooled_labels.insert(pooled_labels.end(), confident_labels.begin(), confident_labels.end());
  }

  const Var l_bc = (hyper.alpha == 0.0 && hyper.beta == 0.0)
                       ? zero(graph)
                       : between_class_loss(graph, batch_centers(zs, batch.source_y), target_centers, hyper.alpha,
                                            hyper.beta);
  const Var l_wc = within_class_loss(graph, pooled, pooled_labels, num_classes);
  const Var l_em = entropy_loss(pt);

  const Var total = l_class + l_adv * hyper.eta + l_bc + l_wc * hyper.gamma + l_em;

  Objective out{total, {}};
  out.breakdown = {l_class.item(), l_adv.item(), l_bc.item(), l_wc.item(), l_em.item(), total.item(), hyper};
  return out;
}

}  // namespace pda::losses
