#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pda/diff/graph.hpp"

namespace pda::diff {

/// Builds a scalar objective from leaf variables bound to a parameter set.
using Objective = std::function<Var(Graph&, std::span<const Var>)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients against central differences, coordinate by
/// coordinate. Error per coordinate is |analytic - numeric| / max(1, |analytic|).
/// Throws NumericError if the objective evaluates to a non-finite value.
GradCheckResult finite_diff_report(const Objective& f, std::span<const Tensor> theta, double eps);

/// Maximum relative error of finite_diff_report().
double finite_diff_check(const Objective& f, std::span<const Tensor> theta, double eps);

}  // namespace pda::diff
