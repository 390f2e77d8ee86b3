#include <cmath>
#include <optional>
#include <random>

#include <doctest.h>

#include "pda/checkpoint.hpp"
#include "pda/diff/ops.hpp"
#include "pda/errors.hpp"
#include "pda/networks.hpp"

using namespace pda;
using namespace pda::networks;

namespace {

Tensor random_input(std::size_t rows, std::size_t cols, std::uint64_t seed, double stddev = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, stddev);
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = gauss(rng);
  return t;
}

ModelShape small_shape() {
  ModelShape shape;
  shape.input_width = 4;
  shape.feature_hidden = {8};
  shape.bottleneck = 6;
  shape.num_classes = 5;
  shape.discriminator_hidden = {5};
  return shape;
}

}  // namespace

TEST_CASE("init_network") {
  const MlpSpec spec = MlpSpec::uniform({4, 8, 3}, Activation::relu, Head::linear);
  const MlpParams a = init_network(spec, 7);
  CHECK(a == init_network(spec, 7));
  CHECK_FALSE(a == init_network(spec, 8));
  REQUIRE(a.weights.size() == 2);
  CHECK(a.weights[0].shape() == diff::Shape{4, 8});
  CHECK(a.weights[1].shape() == diff::Shape{8, 3});
  for (const Tensor& b : a.biases) {
    for (double v : b.values()) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(MlpSpec::uniform({4}, Activation::relu, Head::linear).validate(), UsageError);
}

TEST_CASE("feature extractor shapes and degenerate cases") {
  const ModelBundle model = make_bundle(small_shape(), 3);
  const Tensor x = random_input(5, 4, 1);
  CHECK(extract_features(model.feature, x).shape() == diff::Shape{5, 6});

  const Tensor z = extract_features(zero_network(model.feature.spec), x);
  for (double v : z.values()) CHECK(v == 0.0);

  Tensor same({2, 4});
  for (std::size_t c = 0; c < 4; ++c) same.at(0, c) = same.at(1, c) = 0.25 * static_cast<double>(c);
  const Tensor zs = extract_features(model.feature, same);
  for (std::size_t c = 0; c < 6; ++c) CHECK(zs.at(0, c) == zs.at(1, c));

  CHECK_THROWS_AS(extract_features(model.feature, random_input(2, 3, 1)), DimensionError);
}

TEST_CASE("classifier rows are distributions") {
  const ModelBundle model = make_bundle(small_shape(), 3);
  const Tensor p = classify(model.classifier, random_input(7, 6, 2));
  CHECK(p.cols() == 5);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double total = 0.0;
    for (double v : p.row(r)) total += v;
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
  const Tensor u = classify(zero_network(model.classifier.spec), random_input(3, 6, 2));
  for (double v : u.values()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("discriminator") {
  const ModelBundle model = make_bundle(small_shape(), 3);
  diff::Graph g;
  const BoundMlp zero = bind(g, zero_network(model.discriminator.spec));
  const Var d = discriminate(zero, g.constant(random_input(4, 6, 9)), 1.0);
  CHECK(d.shape() == diff::Shape{4});
  for (double v : d.value().values()) CHECK(v == 0.5);

  const BoundMlp real = bind(g, model.discriminator);
  const Var out = discriminate(real, g.constant(random_input(50, 6, 10, 20.0)), 1.0);
  for (double v : out.value().values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("lambda 0 keeps the adversarial gradient out of F") {
  const ModelBundle model = make_bundle(small_shape(), 4);
  diff::Graph g;
  const BoundBundle net = bind(g, model);
  const Var z = extract_features(net.feature, g.constant(random_input(6, 4, 3)));
  g.backward(diff::mean(discriminate(net.discriminator, z, 0.0)));
  for (const Var& w : net.feature.weights) {
    for (double v : w.grad().values()) CHECK(v == 0.0);
  }
  bool discriminator_moved = false;
  for (const Var& w : net.discriminator.weights) {
    for (double v : w.grad().values()) discriminator_moved = discriminator_moved || v != 0.0;
  }
  CHECK(discriminator_moved);
}

TEST_CASE("reversed adversarial gradients into F are -lambda times the plain ones") {
  const ModelBundle model = make_bundle(small_shape(), 5);
  const Tensor x = random_input(8, 4, 4);
  const auto feature_grads = [&](std::optional<double> lambda) {
    diff::Graph g;
    const BoundBundle net = bind(g, model);
    const Var z = extract_features(net.feature, g.constant(x));
    const Var d = lambda ? discriminate(net.discriminator, z, *lambda) : discriminate(net.discriminator, z);
    g.backward(diff::mean(diff::log(d)));
    std::vector<Tensor> out;
    for (const Var& w : net.feature.weights) out.push_back(w.grad());
    for (const Var& b : net.feature.biases) out.push_back(b.grad());
    return out;
  };
  const auto plain = feature_grads(std::nullopt);
  for (double lambda : {1.0, 0.37, 2.0}) {
    const auto reversed = feature_grads(lambda);
    for (std::size_t t = 0; t < plain.size(); ++t) {
      for (std::size_t i = 0; i < plain[t].size(); ++i) {
        CHECK(reversed[t][i] == doctest::Approx(-lambda * plain[t][i]).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("bundle validation and checkpoint round trip") {
  ModelBundle model = make_bundle(small_shape(), 6);
  CHECK_NOTHROW(model.validate());
  CHECK(model.num_classes() == 5);
  CHECK(model.bottleneck() == 6);
  CHECK(model.parameters().size() == 4 + 2 + 4);

  const ModelBundle back = bundle_from_json(to_json(model, 42));
  CHECK(back == model);

  ModelBundle broken = model;
  broken.classifier.spec.head = Head::linear;
  CHECK_THROWS(broken.validate());
}
