#pragma once

#include <cstddef>
#include <vector>

/// Straight-line recomputation of the class-importance pipeline (centers,
/// similarities, probabilities, pseudo-labels, threshold, confident set,
/// weights). Shares no code with pda::alignment; used to cross-check it.
namespace pda::oracle {

using Rows = std::vector<std::vector<double>>;

struct Instance {
  std::size_t num_classes = 0;
  Rows source;
  std::vector<int> source_labels;
  Rows target;
  std::vector<double> previous_weights;
};

struct Expected {
  Rows centers;                  // indexed by class; every class must have samples
  Rows target_similarity;        // per target
  Rows target_probs;             // per target
  std::vector<int> pseudo_labels;
  double threshold = 0.0;
  std::vector<std::size_t> confident;  // target rows, ascending
  std::vector<double> weights;
};

/// `zero_threshold` mirrors the threshold-zero ablation.
Expected recompute(const Instance& instance, bool zero_threshold = false);

}  // namespace pda::oracle
