#include "pda/diff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "pda/errors.hpp"

namespace pda::diff {
namespace {

double evaluate(const Objective& f, std::span<const Tensor> theta) {
  Graph graph;
  std::vector<Var> leaves;
  leaves.reserve(theta.size());
  for (const Tensor& t : theta) leaves.push_back(graph.constant(t));
  const double value = f(graph, leaves).item();
  if (!std::isfinite(value)) throw NumericError("finite_diff_check: objective is not finite");
  return value;
}

}  // namespace

GradCheckResult finite_diff_report(const Objective& f, std::span<const Tensor> theta, double eps) {
  if (!(eps > 0.0)) throw UsageError("finite_diff_check: eps must be positive");

  std::vector<Tensor> analytic;
  {
    Graph graph;
    std::vector<Var> leaves;
    for (const Tensor& t : theta) leaves.push_back(graph.leaf(t));
    const Var root = f(graph, leaves);
    if (!std::isfinite(root.item())) throw NumericError("finite_diff_check: objective is not finite");
    graph.backward(root);
    for (const Var& leaf : leaves) analytic.push_back(leaf.grad());
  }

  GradCheckResult result;
  std::vector<Tensor> probe(theta.begin(), theta.end());
  for (std::size_t t = 0; t < probe.size(); ++t) {
    for (std::size_t i = 0; i < probe[t].size(); ++i) {
      const double original = probe[t][i];
      probe[t][i] = original + eps;
      const double up = evaluate(f, probe);
      probe[t][i] = original - eps;
      const double down = evaluate(f, probe);
      probe[t][i] = original;

      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[t][i];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      ++result.coordinates;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_tensor = t;
        result.worst_index = i;
      }
    }
  }
  return result;
}

double finite_diff_check(const Objective& f, std::span<const Tensor> theta, double eps) {
  return finite_diff_report(f, theta, eps).max_relative_error;
}

}  // namespace pda::diff
