#include "pda/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "pda/checkpoint.hpp"

namespace pda::trainer {
namespace {

std::vector<diff::Var> bound_parameters(const networks::BoundBundle& bound) {
  std::vector<diff::Var> out;
  for (const networks::BoundMlp* net : {&bound.feature, &bound.classifier, &bound.discriminator}) {
    for (std::size_t l = 0; l < net->weights.size(); ++l) {
      out.push_back(net->weights[l]);
      out.push_back(net->biases[l]);
    }
  }
  return out;
}

std::size_t source_class_count(const data::Dataset& source) {
  const auto classes = source.classes();
  if (classes.empty()) throw UsageError("source dataset has no labels");
  const auto count = static_cast<std::size_t>(classes.back()) + 1;
  if (classes.size() != count) throw UsageError("source dataset must contain every class 0..|C_s|-1");
  return count;
}

}  // namespace

std::string to_string(ThresholdMode mode) { return mode == ThresholdMode::eq7 ? "eq7" : "zero"; }

ThresholdMode parse_threshold_mode(const std::string& name) {
  if (name == "eq7") return ThresholdMode::eq7;
  if (name == "zero") return ThresholdMode::zero;
  throw UsageError("unknown threshold mode '" + name + "'");
}

std::string to_string(alignment::ThresholdRule rule) {
  return rule == alignment::ThresholdRule::max_probability ? "max" : "ground_truth";
}

alignment::ThresholdRule parse_threshold_rule(const std::string& name) {
  if (name == "max") return alignment::ThresholdRule::max_probability;
  if (name == "ground_truth") return alignment::ThresholdRule::ground_truth;
  throw UsageError("unknown threshold rule '" + name + "'");
}

ScheduleValues schedule(double progress, double base_lr, const ScheduleParams& params) {
  if (!(progress >= 0.0 && progress <= 1.0)) throw UsageError("schedule: progress outside [0, 1]");
  return {base_lr / std::pow(1.0 + params.lr_alpha * progress, params.lr_beta),
          params.eta_max * (2.0 / (1.0 + std::exp(-params.eta_gamma * progress)) - 1.0)};
}

void TrainConfig::validate() const {
  if (cadence < 1) throw UsageError("cadence must be at least 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw UsageError("momentum must lie in [0, 1)");
  if (hyper.alpha < 0.0 || hyper.beta < 0.0 || hyper.gamma < 0.0) throw UsageError("alpha, beta, gamma must be >= 0");
  if (batch_size < 1) throw UsageError("batch_size must be at least 1");
  if (!(base_lr > 0.0)) throw UsageError("base_lr must be positive");
  if (!(new_layer_lr_mult > 0.0)) throw UsageError("new_layer_lr_mult must be positive");
  if (schedule.eta_max < 0.0) throw UsageError("eta_max must be >= 0");
  if (bottleneck == 0) throw UsageError("bottleneck must be positive");
}

void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, std::span<const double> lrs,
              double momentum, SgdState& state) {
  if (params.size() != grads.size() || params.size() != lrs.size()) {
    throw DimensionError("sgd_step: parameter, gradient and learning-rate counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape()) throw DimensionError("sgd_step: gradient shape mismatch");
    if (!grads[i].all_finite()) throw NumericError("sgd_step: non-finite gradient");
  }
  if (state.velocity.empty()) {
    for (const Tensor* p : params) state.velocity.emplace_back(p->shape());
  }
  if (state.velocity.size() != params.size()) throw DimensionError("sgd_step: velocity state does not match");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& v = state.velocity[i];
    Tensor& theta = *params[i];
    const Tensor& g = grads[i];
    for (std::size_t k = 0; k < theta.size(); ++k) {
      v[k] = momentum * v[k] + g[k];
      theta[k] -= lrs[i] * v[k];
    }
  }
}

void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, double lr, double momentum,
              SgdState& state) {
  const std::vector<double> lrs(params.size(), lr);
  sgd_step(params, grads, lrs, momentum, state);
}

ImportanceState update_importance_state(const ModelBundle& model, const data::Dataset& source,
                                        const data::Dataset& target, ThresholdMode mode,
                                        alignment::ThresholdRule rule, const ClassWeights& previous) {
  if (source.empty() || target.empty()) throw UsageError("update_importance_state: datasets must be non-empty");
  const Tensor source_latents = networks::extract_features(model.feature, source.features());
  const Tensor target_latents = networks::extract_features(model.feature, target.features());

  ImportanceState state;
  state.centers = alignment::class_centers(source_latents, source.labels(), model.num_classes());
  state.threshold = mode == ThresholdMode::zero
                        ? 0.0
                        : alignment::confidence_threshold(source_latents, state.centers, rule, source.labels());
  state.confident = alignment::select_confident(target_latents, state.centers, state.threshold);
  state.weights = alignment::class_weights(state.confident, previous);
  return state;
}

ModelBundle initial_model(const TrainConfig& config, std::size_t input_width, std::size_t num_classes) {
  networks::ModelShape shape;
  shape.input_width = input_width;
  shape.feature_hidden = config.feature_hidden;
  shape.bottleneck = config.bottleneck;
  shape.num_classes = num_classes;
  shape.discriminator_hidden = config.discriminator_hidden;
  shape.activation = config.activation;
  return networks::make_bundle(shape, config.seed);
}

TrainResult train(const TrainConfig& config, const data::Dataset& source, const data::Dataset& target,
                  const EvaluationHook& evaluate) {
  config.validate();
  if (source.domain() != data::Domain::source || target.domain() != data::Domain::target) {
    throw UsageError("train: expected a source and a target dataset");
  }
  if (source.empty() || target.empty()) throw UsageError("train: datasets must be non-empty");
  if (source.dim() != target.dim()) throw DimensionError("train: source and target feature widths differ");

  const std::size_t num_classes = source_class_count(source);
  TrainResult result{initial_model(config, source.dim(), num_classes), {}};
  RunHistory& history = result.history;
  ModelBundle& model = result.model;

  ClassWeights weights = ClassWeights::ones(num_classes);
  history.initial_weights = weights;
  std::vector<int> pseudo_lookup(target.size(), -1);

  data::BatchSampler source_sampler(source.size(), config.seed * 2654435761ULL + 17);
  data::BatchSampler target_sampler(target.size(), config.seed * 2654435761ULL + 29);
  SgdState sgd;
  const std::vector<Tensor*> params = model.parameters();
  const std::size_t feature_tensors = 2 * model.feature.weights.size();
  losses::LossBreakdown last_finite;
  history.steps.reserve(config.steps);

  for (std::size_t step = 0; step < config.steps; ++step) {
    const double progress = static_cast<double>(step) / static_cast<double>(config.steps);
    const ScheduleValues sched = schedule(progress, config.base_lr, config.schedule);
    losses::HyperParams hyper = config.hyper;
    hyper.eta = sched.eta;

    const auto source_idx = source_sampler.next(config.batch_size);
    const auto target_idx = target_sampler.next(config.batch_size);
    losses::BatchInputs batch{source.rows(source_idx), source.labels_at(source_idx), target.rows(target_idx), {}};
    batch.target_pseudo.reserve(target_idx.size());
    for (std::size_t i : target_idx) batch.target_pseudo.push_back(pseudo_lookup[i]);

    StepRecord record{step, {}, sched.eta, sched.lr, weights};
    try {
      diff::Graph graph;
      const networks::BoundBundle bound = networks::bind(graph, model);
      const losses::Objective objective =
          losses::total_objective(graph, batch, bound, weights, hyper, config.adv_target_form);
      record.losses = objective.breakdown;
      graph.backward(objective.total);

      const auto vars = bound_parameters(bound);
      std::vector<Tensor> grads;
      grads.reserve(vars.size());
      for (const auto& v : vars) grads.push_back(v.grad());
      std::vector<double> lrs(params.size(), sched.lr);
      for (std::size_t i = feature_tensors; i < lrs.size(); ++i) lrs[i] *= config.new_layer_lr_mult;
      sgd_step(params, grads, lrs, config.momentum, sgd);
    } catch (const NumericError& e) {
      throw TrainingDiverged(step, e.what(), last_finite);
    }
    last_finite = record.losses;
    history.steps.push_back(std::move(record));

    const std::size_t done = step + 1;
    if (done % config.cadence == 0) {
      const ImportanceState state = update_importance_state(model, source, target, config.threshold_mode,
                                                            config.threshold_rule, weights);
      weights = state.weights;
      pseudo_lookup = state.confident.label_lookup();
      history.events.push_back({history.events.size(), done, state.threshold, state.confident.size(),
                                state.confident.candidates, weights, alignment::vote_mass(state.confident)});
    }
    if (evaluate && config.eval_every > 0 && done % config.eval_every == 0) {
      history.evaluations.push_back({done, evaluate(model)});
    }
    if (config.checkpoint_every > 0 && done % config.checkpoint_every == 0) {
      networks::save_checkpoint(config.checkpoint_dir / ("checkpoint_" + std::to_string(done) + ".json"), model,
                                static_cast<long>(done));
    }
  }
  return result;
}

}  // namespace pda::trainer
