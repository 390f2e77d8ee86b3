#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pda::harness {

struct GradCheckOutcome {
  std::string name;  // l_class, l_adv, l_bc, l_wc, l_em, total
  std::size_t trials = 0;
  double max_error = 0.0;
};

/// Finite-difference check of every loss term and the total objective on
/// random small batches (tanh networks, so the objective is smooth).
std::vector<GradCheckOutcome> run_gradient_suite(std::size_t trials, std::uint64_t seed, double eps = 1e-4);

struct OracleOutcome {
  std::size_t instances = 0;
  double max_abs_diff = 0.0;  // over centers, similarities, probabilities, threshold, weights
  std::size_t label_mismatches = 0;
  std::size_t membership_mismatches = 0;
};

/// Compares pda::alignment against the brute-force recomputation on random
/// instances with at most 20 samples per domain and at most 5 classes. Every
/// fourth instance uses the zero threshold.
OracleOutcome run_oracle_suite(std::size_t instances, std::uint64_t seed);

}  // namespace pda::harness
