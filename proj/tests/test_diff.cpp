#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "pda/diff/gradcheck.hpp"
#include "pda/diff/graph.hpp"
#include "pda/diff/ops.hpp"
#include "pda/errors.hpp"

using namespace pda;
using namespace pda::diff;

TEST_CASE("affine forward") {
  Graph g;
  SUBCASE("identity weight") {
    const Var y = affine(g.constant(Tensor::matrix(1, 2, {1, 2})), g.constant(Tensor::matrix(2, 2, {1, 0, 0, 1})),
                         g.constant(Tensor::vector({0, 0})));
    CHECK(y.value() == Tensor::matrix(1, 2, {1, 2}));
  }
  SUBCASE("one step of arithmetic") {
    const Var y = affine(g.constant(Tensor::matrix(1, 2, {1, 1})), g.constant(Tensor::matrix(2, 2, {2, 3, 4, 5})),
                         g.constant(Tensor::vector({1, 1})));
    CHECK(y.value() == Tensor::matrix(1, 2, {7, 9}));
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(affine(g.constant(Tensor::matrix(1, 3, {1, 1, 1})), g.constant(Tensor::matrix(2, 2, {1, 0, 0, 1})),
                           g.constant(Tensor::vector({0, 0}))),
                    DimensionError);
  }
}

TEST_CASE("relu derivative at 2 is 1") {
  Graph g;
  const Var x = g.leaf(Tensor::scalar(2.0));
  g.backward(relu(x));
  CHECK(x.grad().item() == 1.0);
}

TEST_CASE("softmax closed forms") {
  Graph g;
  const Var a = softmax(g.constant(Tensor::vector({0, 0, 0})));
  for (double v : a.value().values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const Var b = softmax(g.constant(Tensor::vector({0, std::log(2.0)})));
  CHECK(b.value()[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(b.value()[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(softmax(g.constant(Tensor::vector({0, NAN}))), NumericError);
}

TEST_CASE("softmax sums to one and ignores constant shifts") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + trial % 7;
    std::vector<double> z(k), shifted(k);
    const double shift = gauss(rng) * 10.0;
    for (std::size_t i = 0; i < k; ++i) {
      z[i] = gauss(rng);
      shifted[i] = z[i] + shift;
    }
    Graph g;
    const Tensor p = softmax(g.constant(Tensor::vector(z))).value();
    const Tensor q = softmax(g.constant(Tensor::vector(shifted))).value();
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      total += p[i];
      CHECK(std::abs(p[i] - q[i]) <= 1e-12);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("gradient reversal") {
  SUBCASE("square of reversed x at 3") {
    Graph g;
    const Var x = g.leaf(Tensor::scalar(3.0));
    const Var y = square(reverse_gradient(x, 1.0));
    CHECK(y.item() == 9.0);
    g.backward(y);
    CHECK(x.grad().item() == -6.0);
  }
  SUBCASE("lambda 0 blocks the gradient") {
    Graph g;
    const Var x = g.leaf(Tensor::scalar(3.0));
    g.backward(square(reverse_gradient(x, 0.0)));
    CHECK(x.grad().item() == 0.0);
  }
  SUBCASE("lambda 2 on the identity at 5") {
    Graph g;
    const Var x = g.leaf(Tensor::scalar(5.0));
    const Var y = reverse_gradient(x, 2.0);
    CHECK(y.item() == 5.0);
    g.backward(y);
    CHECK(x.grad().item() == -2.0);
  }
  SUBCASE("negative lambda is rejected") {
    Graph g;
    CHECK_THROWS_AS(reverse_gradient(g.leaf(Tensor::scalar(1.0)), -1.0), UsageError);
  }
}

TEST_CASE("lambda 1 reversal is the exact negation of the plain graph") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> xv(6), wv(12);
    for (double& v : xv) v = gauss(rng);
    for (double& v : wv) v = gauss(rng);
    const auto run = [&](bool reversed) {
      Graph g;
      const Var x = g.leaf(Tensor::matrix(2, 3, xv));
      const Var w = g.constant(Tensor::matrix(3, 4, wv));
      const Var h = reversed ? reverse_gradient(x, 1.0) : x;
      const Var y = sum(sigmoid(affine(h, w, g.constant(Tensor::vector({0.1, 0.2, 0.3, 0.4})))));
      g.backward(y);
      return x.grad();
    };
    const Tensor plain = run(false);
    const Tensor reversed = run(true);
    for (std::size_t i = 0; i < plain.size(); ++i) CHECK(reversed[i] == -plain[i]);
  }
}

TEST_CASE("backward closed forms") {
  Graph g;
  const Var x = g.leaf(Tensor::scalar(3.0));
  const Var y = g.leaf(Tensor::scalar(-1.5));
  g.backward(x * x);
  CHECK(x.grad().item() == 6.0);
  g.zero_grad();
  g.backward(x + y);
  CHECK(x.grad().item() == 1.0);
  CHECK(y.grad().item() == 1.0);
  CHECK_THROWS_AS(g.backward(g.leaf(Tensor::vector({1, 2}))), UsageError);
}

TEST_CASE("log-softmax gradient agrees with central differences") {
  const Objective f = [](Graph&, std::span<const Var> p) {
    return sum(pick(reshape(log(softmax(p[0])), {1, 2}), std::vector<int>{0}));
  };
  for (const auto& ab : std::vector<std::vector<double>>{{0.3, -1.2}, {2.0, 2.0}, {-4.0, 1.0}}) {
    const std::vector<Tensor> theta{Tensor::vector(ab)};
    CHECK(finite_diff_check(f, theta, 1e-4) <= 1e-6);
  }
}

TEST_CASE("finite_diff_check contract") {
  SUBCASE("quadratic form") {
    // f(x) = x^T A x with A symmetric positive definite; analytic gradient 2Ax.
    const Tensor a = Tensor::matrix(3, 3, {4, 1, 0, 1, 3, 1, 0, 1, 2});
    const Objective f = [&a](Graph& g, std::span<const Var> p) {
      const Var row = reshape(p[0], {1, 3});
      const Var ax = affine(row, g.constant(a), g.constant(Tensor::vector({0, 0, 0})));
      return sum(mul(ax, row));
    };
    const std::vector<Tensor> theta{Tensor::vector({0.5, -1.0, 2.0})};
    CHECK(finite_diff_check(f, theta, 1e-4) <= 1e-6);

    // The oracle gradient 2Ax, computed independently.
    Graph g;
    const Var x = g.leaf(theta[0]);
    g.backward(f(g, std::vector<Var>{x}));
    const std::vector<double> expected{2 * (4 * 0.5 - 1.0), 2 * (0.5 - 3.0 + 2.0), 2 * (-1.0 + 4.0)};
    for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
  SUBCASE("constant objective") {
    const Objective f = [](Graph& g, std::span<const Var>) { return g.constant(Tensor::scalar(2.5)); };
    const std::vector<Tensor> theta{Tensor::vector({1.0, 2.0})};
    CHECK(finite_diff_check(f, theta, 1e-4) == 0.0);
  }
  SUBCASE("non-finite objective") {
    const Objective f = [](Graph&, std::span<const Var> p) { return scale(sum(p[0]), HUGE_VAL); };
    const std::vector<Tensor> theta{Tensor::vector({1.0})};
    CHECK_THROWS_AS(finite_diff_check(f, theta, 1e-4), NumericError);
  }
}

TEST_CASE("non-finite values are rejected at record time") {
  Graph g;
  const Var x = g.leaf(Tensor::scalar(1e308));
  CHECK_THROWS_AS(x * 1e10, NumericError);
}

TEST_CASE("pairwise squared distances") {
  Graph g;
  const Var x = g.leaf(Tensor::matrix(3, 2, {0, 0, 3, 4, 0, 1}));
  const Var s = sum_pairwise_sq_dist(x);
  // Ordered pairs: 2 * (25 + 1 + 18).
  CHECK(s.item() == doctest::Approx(88.0));
  const std::vector<Tensor> theta{x.value()};
  CHECK(finite_diff_check([](Graph&, std::span<const Var> p) { return sum_pairwise_sq_dist(p[0]); }, theta, 1e-4) <=
        1e-6);
}

TEST_CASE("sigmoid stays strictly inside (0, 1)") {
  Graph g;
  const Var y = sigmoid(g.leaf(Tensor::vector({-1000.0, -40.0, 0.0, 40.0, 1000.0})));
  for (double v : y.value().values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK(y.value()[2] == 0.5);
}
