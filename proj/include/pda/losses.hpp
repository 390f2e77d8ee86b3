#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pda/alignment.hpp"
#include "pda/diff/ops.hpp"
#include "pda/networks.hpp"

namespace pda::losses {

using alignment::ClassWeights;
using diff::Graph;
using diff::Tensor;
using diff::Var;

struct HyperParams {
  double alpha = 0.1;  // within-domain center separation (source-source, target-target)
  double beta = 0.9;   // cross-domain center separation
  double gamma = 1.7;  // within-class compactness
  double eta = 0.0;    // adversarial weight, also the gradient reversal strength

  bool operator==(const HyperParams&) const = default;
};

/// How the target half of the adversarial loss is read:
/// bce is -mean log(1 - d_t); printed is -mean(1 - log d_t).
enum class AdvTargetForm { bce, printed };

std::string to_string(AdvTargetForm form);
AdvTargetForm parse_adv_target_form(const std::string& name);

struct LossBreakdown {
  double l_class = 0.0;
  double l_adv = 0.0;
  double l_bc = 0.0;
  double l_wc = 0.0;
  double l_em = 0.0;
  double total = 0.0;
  HyperParams hyper;

  bool operator==(const LossBreakdown&) const = default;
};

/// Class centers held as graph variables so distances between them stay differentiable.
struct CenterVars {
  std::vector<int> classes;  // ascending
  std::vector<Var> means;

  const Var* find(int c) const;
  std::size_t size() const { return classes.size(); }
};

/// Per-class row means of `latents` for the classes occurring in `labels`.
CenterVars batch_centers(Var latents, std::span<const int> labels);

/// Importance-weighted cross-entropy of the true class; log floored at 1e-12.
Var classification_loss(Var probs_s, std::span<const int> y_s, const ClassWeights& weights);

/// Weighted domain-classification loss on source/target discriminator outputs.
Var adversarial_loss(Var d_s, Var d_t, std::span<const int> y_s, const ClassWeights& weights,
                     AdvTargetForm form = AdvTargetForm::bce);

/// Negated, normalised sum of center-to-center distances:
/// -[alpha (S-S pairs + T-T pairs) + beta (S-T pairs over the target class set)].
/// Terms whose class set has fewer than two classes are zero, and cross pairs
/// lacking a source center are skipped.
Var between_class_loss(Graph& graph, const CenterVars& source, const CenterVars& target, double alpha, double beta);

/// Mean over all num_classes classes of the average squared distance between
/// distinct pooled samples of that class. Classes with fewer than two samples add zero.
Var within_class_loss(Graph& graph, Var latents, std::span<const int> labels, std::size_t num_classes);

/// Mean Shannon entropy (natural log) of the rows of `probs_t`.
Var entropy_loss(Var probs_t);

/// One minibatch: labelled source rows and target rows. `target_pseudo[i]` is
/// the pseudo-label of target row i if it belongs to the confident set, else -1.
struct BatchInputs {
  Tensor source_x;
  std::vector<int> source_y;
  Tensor target_x;
  std::vector<int> target_pseudo;
};

struct Objective {
  Var total;
  LossBreakdown breakdown;
};

/// How gradients flow from l_adv into F. Training inserts the reversal layer
/// (coefficient eta); `exact` drops it so backward() is the true gradient of
/// the value, which is what a finite-difference check can compare against.
enum class GradientFlow { reversed, exact };

/// l_class + eta l_adv + l_bc + gamma l_wc + l_em on one batch.
Objective total_objective(Graph& graph, const BatchInputs& batch, const networks::BoundBundle& model,
                          const ClassWeights& weights, const HyperParams& hyper,
                          AdvTargetForm form = AdvTargetForm::bce, GradientFlow flow = GradientFlow::reversed);

}  // namespace pda::losses
