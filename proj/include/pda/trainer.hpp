#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pda/alignment.hpp"
#include "pda/data.hpp"
#include "pda/errors.hpp"
#include "pda/losses.hpp"
#include "pda/networks.hpp"

namespace pda::trainer {

using alignment::ClassWeights;
using diff::Tensor;
using networks::ModelBundle;

enum class ThresholdMode {
  eq7,   // source-derived confidence threshold
  zero,  // every target votes
};

std::string to_string(ThresholdMode mode);
ThresholdMode parse_threshold_mode(const std::string& name);
std::string to_string(alignment::ThresholdRule rule);
alignment::ThresholdRule parse_threshold_rule(const std::string& name);

/// eta(p) = eta_max (2 / (1 + exp(-eta_gamma p)) - 1),
/// lr(p)  = base_lr / (1 + lr_alpha p)^lr_beta.
struct ScheduleParams {
  double eta_max = 1.0;
  double eta_gamma = 10.0;
  double lr_alpha = 10.0;
  double lr_beta = 0.75;
};

struct ScheduleValues {
  double lr = 0.0;
  double eta = 0.0;
};

ScheduleValues schedule(double progress, double base_lr, const ScheduleParams& params = {});

struct TrainConfig {
  std::vector<std::size_t> feature_hidden{64};
  std::size_t bottleneck = 32;
  std::vector<std::size_t> discriminator_hidden{32};
  networks::Activation activation = networks::Activation::relu;

  std::size_t batch_size = 32;
  std::size_t steps = 3000;
  double base_lr = 0.01;
  double momentum = 0.9;
  /// Learning-rate multiplier for G_y and G_d relative to F.
  double new_layer_lr_mult = 1.0;
  losses::HyperParams hyper;  // hyper.eta is ignored; the schedule supplies it
  ScheduleParams schedule;
  std::size_t cadence = 150;
  ThresholdMode threshold_mode = ThresholdMode::eq7;
  alignment::ThresholdRule threshold_rule = alignment::ThresholdRule::max_probability;
  losses::AdvTargetForm adv_target_form = losses::AdvTargetForm::bce;
  std::uint64_t seed = 0;

  std::size_t eval_every = 0;        // 0 disables the evaluation hook
  std::size_t checkpoint_every = 0;  // 0 disables checkpoints
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

struct SgdState {
  std::vector<Tensor> velocity;
};

/// v <- momentum v + g; theta <- theta - lr v. Throws NumericError, leaving
/// everything untouched, if any gradient is non-finite.
void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, std::span<const double> lrs,
              double momentum, SgdState& state);
void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, double lr, double momentum,
              SgdState& state);

struct ImportanceState {
  alignment::ClassCenters centers;
  double threshold = 0.0;
  alignment::ConfidentTargetSet confident;
  ClassWeights weights;
};

/// Full-dataset pass: source centers, threshold, confident targets, weights.
/// Only the target features are read.
ImportanceState update_importance_state(const ModelBundle& model, const data::Dataset& source,
                                        const data::Dataset& target, ThresholdMode mode,
                                        alignment::ThresholdRule rule, const ClassWeights& previous);

struct StepRecord {
  std::size_t step = 0;
  losses::LossBreakdown losses;
  double eta = 0.0;
  double lr = 0.0;
  ClassWeights weights;  // weights used in this step
};

struct ImportanceEvent {
  std::size_t event = 0;
  std::size_t step = 0;  // number of completed steps when the event fired
  double threshold = 0.0;
  std::size_t confident = 0;
  std::size_t candidates = 0;
  ClassWeights weights;
  std::vector<double> vote_mass;
};

struct EvaluationRecord {
  std::size_t step = 0;
  double accuracy = 0.0;
};

struct RunHistory {
  ClassWeights initial_weights;
  std::vector<StepRecord> steps;
  std::vector<ImportanceEvent> events;
  std::vector<EvaluationRecord> evaluations;
};

struct TrainResult {
  ModelBundle model;
  RunHistory history;
};

/// Called every eval_every steps with the current model; returns an accuracy.
using EvaluationHook = std::function<double(const ModelBundle&)>;

/// Raised when a step produces a non-finite loss or gradient.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(std::size_t step, const std::string& what, losses::LossBreakdown last)
      : NumericError("training diverged at step " + std::to_string(step) + ": " + what), step_(step), last_(last) {}

  std::size_t step() const noexcept { return step_; }
  const losses::LossBreakdown& last_finite() const noexcept { return last_; }

 private:
  std::size_t step_;
  losses::LossBreakdown last_;
};

ModelBundle initial_model(const TrainConfig& config, std::size_t input_width, std::size_t num_classes);

TrainResult train(const TrainConfig& config, const data::Dataset& source, const data::Dataset& target,
                  const EvaluationHook& evaluate = {});

}  // namespace pda::trainer
