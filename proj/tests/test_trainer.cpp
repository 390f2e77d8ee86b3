#include <cmath>
#include <random>

#include <doctest.h>

#include "pda/data.hpp"
#include "pda/errors.hpp"
#include "pda/harness/plots.hpp"
#include "pda/trainer.hpp"

using namespace pda;
using namespace pda::trainer;

namespace {

data::DomainPair small_task(std::uint64_t seed) {
  data::PartialTaskSpec spec;
  spec.samples_per_class = 20;
  spec.seed = seed;
  return data::generate_synthetic(spec);
}

TrainConfig small_config() {
  TrainConfig c;
  c.feature_hidden = {12};
  c.bottleneck = 6;
  c.discriminator_hidden = {6};
  c.batch_size = 16;
  c.steps = 60;
  c.cadence = 20;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("sgd step") {
  SUBCASE("vanilla step") {
    Tensor theta = Tensor::vector({0.0});
    std::vector<Tensor*> params{&theta};
    SgdState state;
    sgd_step(params, std::vector<Tensor>{Tensor::vector({1.0})}, 0.1, 0.0, state);
    CHECK(theta[0] == doctest::Approx(-0.1).epsilon(1e-15));
  }
  SUBCASE("momentum recurrence") {
    // Oracle: v1 = g, v2 = mu v1 + g; theta = -lr (v1 + v2).
    const double lr = 0.1, mu = 0.9, g = 1.0;
    const double v1 = g, v2 = mu * v1 + g;
    const double expected = -lr * v1 - lr * v2;
    CHECK(expected == doctest::Approx(-0.29).epsilon(1e-12));
    Tensor theta = Tensor::vector({0.0});
    std::vector<Tensor*> params{&theta};
    SgdState state;
    for (int i = 0; i < 2; ++i) sgd_step(params, std::vector<Tensor>{Tensor::vector({g})}, lr, mu, state);
    CHECK(theta[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(state.velocity[0][0] == doctest::Approx(v2).epsilon(1e-15));
  }
  SUBCASE("zero gradient and zero velocity is a fixed point") {
    Tensor theta = Tensor::vector({0.7, -2.0});
    std::vector<Tensor*> params{&theta};
    SgdState state;
    sgd_step(params, std::vector<Tensor>{Tensor::vector({0.0, 0.0})}, 0.5, 0.9, state);
    CHECK(theta == Tensor::vector({0.7, -2.0}));
  }
  SUBCASE("non-finite gradients abort before any update") {
    Tensor a = Tensor::vector({1.0}), b = Tensor::vector({2.0});
    std::vector<Tensor*> params{&a, &b};
    SgdState state;
    CHECK_THROWS_AS(sgd_step(params, std::vector<Tensor>{Tensor::vector({1.0}), Tensor::vector({NAN})}, 0.1, 0.9, state),
                    NumericError);
    CHECK(a[0] == 1.0);
    CHECK(b[0] == 2.0);
  }
}

TEST_CASE("schedule") {
  const ScheduleValues start = schedule(0.0, 0.01);
  CHECK(start.eta == 0.0);
  CHECK(start.lr == 0.01);
  const double oracle = 2.0 / (1.0 + std::exp(-10.0)) - 1.0;
  CHECK(oracle == doctest::Approx(0.99991).epsilon(1e-5));
  CHECK(schedule(1.0, 0.01).eta == doctest::Approx(oracle).epsilon(1e-15));
  double eta = -1.0, lr = 1.0;
  for (int i = 0; i <= 100; ++i) {
    const ScheduleValues v = schedule(i / 100.0, 0.01);
    CHECK(v.eta > eta);
    CHECK(v.lr < lr);
    eta = v.eta;
    lr = v.lr;
  }
  CHECK_THROWS_AS(schedule(1.5, 0.01), UsageError);
}

TEST_CASE("importance state") {
  const auto task = small_task(2);
  const TrainConfig config = small_config();
  const ModelBundle model = initial_model(config, task.source.dim(), 5);
  const auto previous = alignment::ClassWeights::ones(5);

  const ImportanceState zero =
      update_importance_state(model, task.source, task.target, ThresholdMode::zero, config.threshold_rule, previous);
  CHECK(zero.threshold == 0.0);
  CHECK(zero.confident.size() == task.target.size());

  const ImportanceState a =
      update_importance_state(model, task.source, task.target, ThresholdMode::eq7, config.threshold_rule, previous);
  const ImportanceState b =
      update_importance_state(model, task.source, task.target, ThresholdMode::eq7, config.threshold_rule, previous);
  CHECK(a.threshold == b.threshold);
  CHECK(a.weights == b.weights);
  CHECK(a.confident.label_lookup() == b.confident.label_lookup());
}

TEST_CASE("zero steps returns the initial model") {
  const auto task = small_task(1);
  TrainConfig config = small_config();
  config.steps = 0;
  const TrainResult r = train(config, task.source, task.target);
  CHECK(r.model == initial_model(config, task.source.dim(), 5));
  CHECK(r.history.steps.empty());
  CHECK(r.history.events.empty());
}

TEST_CASE("training is deterministic") {
  const auto task = small_task(3);
  const TrainConfig config = small_config();
  const TrainResult a = train(config, task.source, task.target);
  const TrainResult b = train(config, task.source, task.target);
  CHECK(a.model == b.model);
  CHECK(harness::metrics_csv(a.history) == harness::metrics_csv(b.history));
  CHECK(harness::weights_csv(a.history) == harness::weights_csv(b.history));
}

TEST_CASE("weights only change at cadence events") {
  const auto task = small_task(4);
  const TrainConfig config = small_config();
  const TrainResult r = train(config, task.source, task.target);
  REQUIRE(r.history.events.size() == config.steps / config.cadence);
  CHECK(r.history.initial_weights == alignment::ClassWeights::ones(5));
  for (std::size_t s = 0; s < r.history.steps.size(); ++s) {
    const auto& rec = r.history.steps[s];
    if (s < config.cadence) CHECK(rec.weights == alignment::ClassWeights::ones(5));
    if (s > 0 && s % config.cadence != 0) CHECK(rec.weights.values == r.history.steps[s - 1].weights.values);
    if (s >= config.cadence) CHECK(rec.weights == r.history.events[s / config.cadence - 1].weights);
  }
  for (const auto& e : r.history.events) CHECK(e.step % config.cadence == 0);
}

TEST_CASE("permuting target labels leaves training bit-identical") {
  const auto task = small_task(6);
  std::vector<int> labels(task.target.evaluation_labels().begin(), task.target.evaluation_labels().end());
  std::mt19937_64 rng(1);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (int& y : labels) y = (y + 1) % 3;
  const data::Dataset relabelled = task.target.with_labels(labels);
  const TrainConfig config = small_config();
  const TrainResult a = train(config, task.source, task.target);
  const TrainResult b = train(config, task.source, relabelled);
  CHECK(a.model == b.model);
  CHECK(harness::metrics_csv(a.history) == harness::metrics_csv(b.history));
}

TEST_CASE("ablation switches") {
  const auto task = small_task(7);
  SUBCASE("eta_max = 0") {
    TrainConfig config = small_config();
    config.schedule.eta_max = 0.0;
    for (const auto& s : train(config, task.source, task.target).history.steps) {
      CHECK(s.eta == 0.0);
      CHECK(s.eta * s.losses.l_adv == 0.0);
    }
  }
  SUBCASE("alpha = beta = gamma = 0") {
    TrainConfig config = small_config();
    config.hyper = {0.0, 0.0, 0.0, 0.0};
    for (const auto& s : train(config, task.source, task.target).history.steps) {
      CHECK(s.losses.l_bc == 0.0);
      CHECK(s.losses.hyper.gamma * s.losses.l_wc == 0.0);
    }
  }
  SUBCASE("threshold mode zero") {
    TrainConfig config = small_config();
    config.threshold_mode = ThresholdMode::zero;
    for (const auto& e : train(config, task.source, task.target).history.events) {
      CHECK(e.threshold == 0.0);
      CHECK(e.confident == task.target.size());
    }
  }
}

TEST_CASE("config validation") {
  TrainConfig config = small_config();
  config.cadence = 0;
  CHECK_THROWS_AS(config.validate(), UsageError);
  config = small_config();
  config.batch_size = 0;
  CHECK_THROWS_AS(config.validate(), UsageError);
  CHECK(parse_threshold_mode("zero") == ThresholdMode::zero);
  CHECK_THROWS(parse_threshold_mode("half"));
}
