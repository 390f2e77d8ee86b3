#include "pda/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pda/errors.hpp"

namespace pda::alignment {
namespace {

constexpr double kDistributionTolerance = 1e-9;

void check_distribution(std::span<const double> p, const char* name) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw UsageError(std::string("js_divergence: ") + name + " has a negative or NaN entry");
    total += v;
  }
  if (std::abs(total - 1.0) > kDistributionTolerance) {
    throw UsageError(std::string("js_divergence: ") + name + " does not sum to 1");
  }
}

// sum_i a_i log2(a_i / m_i) with 0 log 0 = 0.
double kl_to_mixture(std::span<const double> a, std::span<const double> m) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) out += a[i] * std::log2(a[i] / m[i]);
  }
  return out;
}

std::vector<double> softmax(std::span<const double> v) {
  if (v.empty()) throw UsageError("softmax of an empty vector");
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) throw NumericError("softmax of a non-finite vector");
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - top);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

// Distributions of every source center, indexed by class.
std::vector<std::vector<double>> center_distributions(const ClassCenters& centers) {
  std::vector<std::vector<double>> out(centers.num_classes);
  for (std::size_t c = 0; c < centers.num_classes; ++c) {
    const auto* mu = centers.find(static_cast<int>(c));
    if (!mu) throw UsageError("no center for class " + std::to_string(c));
    out[c] = to_distribution(*mu);
  }
  return out;
}

std::vector<double> similarity_to(std::span<const double> z, const std::vector<std::vector<double>>& dists) {
  const std::vector<double> p = to_distribution(z);
  std::vector<double> out(dists.size());
  for (std::size_t c = 0; c < dists.size(); ++c) {
    if (dists[c].size() != p.size()) throw DimensionError("similarity: latent and center widths differ");
    out[c] = (2.0 - js_divergence(p, dists[c])) / 2.0;
  }
  return out;
}

}  // namespace

const std::vector<double>* ClassCenters::find(int c) const {
  const auto it = std::lower_bound(classes.begin(), classes.end(), c);
  if (it == classes.end() || *it != c) return nullptr;
  return &means[static_cast<std::size_t>(it - classes.begin())];
}

ClassCenters class_centers(const Tensor& latents, std::span<const int> labels, std::span<const int> classes,
                           std::size_t num_classes, CenterDomain domain) {
  if (latents.rank() != 2 || latents.rows() == 0) throw UsageError("class_centers: empty latents");
  if (labels.size() != latents.rows()) throw DimensionError("class_centers: one label per latent row required");
  std::vector<int> wanted(classes.begin(), classes.end());
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

  const std::size_t dim = latents.cols();
  std::vector<std::vector<double>> sums(wanted.size(), std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(wanted.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::lower_bound(wanted.begin(), wanted.end(), labels[i]);
    if (it == wanted.end() || *it != labels[i]) {
      throw UsageError("class_centers: label " + std::to_string(labels[i]) + " outside the class set");
    }
    const auto k = static_cast<std::size_t>(it - wanted.begin());
    const auto row = latents.row(i);
    for (std::size_t j = 0; j < dim; ++j) sums[k][j] += row[j];
    ++counts[k];
  }

  ClassCenters centers;
  centers.domain = domain;
  centers.num_classes = num_classes;
  for (std::size_t k = 0; k < wanted.size(); ++k) {
    if (counts[k] == 0) continue;
    for (double& v : sums[k]) v /= static_cast<double>(counts[k]);
    centers.classes.push_back(wanted[k]);
    centers.means.push_back(std::move(sums[k]));
  }
  return centers;
}

ClassCenters class_centers(const Tensor& latents, std::span<const int> labels, std::size_t num_classes,
                           CenterDomain domain) {
  std::vector<int> all(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) all[c] = static_cast<int>(c);
  return class_centers(latents, labels, all, num_classes, domain);
}

std::vector<double> to_distribution(std::span<const double> z) { return softmax(z); }

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw UsageError("js_divergence: length mismatch");
  check_distribution(p, "p");
  check_distribution(q, "q");
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double js = 0.5 * kl_to_mixture(p, m) + 0.5 * kl_to_mixture(q, m);
  return std::clamp(js, 0.0, 1.0);
}

std::vector<double> similarity(std::span<const double> z, const ClassCenters& centers) {
  return similarity_to(z, center_distributions(centers));
}

std::vector<double> target_probs(std::span<const double> z, const ClassCenters& centers) {
  return softmax(similarity(z, centers));
}

int pseudo_label(std::span<const double> probs) {
  if (probs.empty()) throw UsageError("pseudo_label: empty probability vector");
  // max_element returns the first maximum, which is the lowest index on ties.
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double confidence_threshold(const Tensor& source_latents, const ClassCenters& centers, ThresholdRule rule,
                            std::span<const int> labels) {
  if (source_latents.rank() != 2 || source_latents.rows() == 0) {
    throw UsageError("confidence_threshold: empty source set");
  }
  if (rule == ThresholdRule::ground_truth && labels.size() != source_latents.rows()) {
    throw UsageError("confidence_threshold: ground-truth rule needs one label per source row");
  }
  const auto dists = center_distributions(centers);
  double total = 0.0;
  for (std::size_t i = 0; i < source_latents.rows(); ++i) {
    const auto p = softmax(similarity_to(source_latents.row(i), dists));
    if (rule == ThresholdRule::max_probability) {
      total += *std::max_element(p.begin(), p.end());
    } else {
      const int y = labels[i];
      if (y < 0 || static_cast<std::size_t>(y) >= p.size()) throw UsageError("confidence_threshold: label out of range");
      total += p[static_cast<std::size_t>(y)];
    }
  }
  return total / static_cast<double>(source_latents.rows());
}

std::vector<int> ConfidentTargetSet::label_lookup() const {
  std::vector<int> out(candidates, -1);
  for (const auto& m : members) out.at(m.index) = m.label;
  return out;
}

std::vector<int> ConfidentTargetSet::label_set() const {
  std::vector<int> out;
  for (const auto& m : members) out.push_back(m.label);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ConfidentTargetSet select_confident(const Tensor& target_latents, const ClassCenters& centers, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw UsageError("select_confident: threshold outside [0, 1]");
  ConfidentTargetSet set;
  set.threshold = threshold;
  set.num_classes = centers.num_classes;
  if (target_latents.rank() != 2 || target_latents.rows() == 0) return set;
  set.candidates = target_latents.rows();
  const auto dists = center_distributions(centers);
  for (std::size_t i = 0; i < target_latents.rows(); ++i) {
    auto p = softmax(similarity_to(target_latents.row(i), dists));
    const int label = pseudo_label(p);
    const double confidence = p[static_cast<std::size_t>(label)];
    if (confidence >= threshold) set.members.push_back({i, label, std::move(p), confidence});
  }
  return set;
}

ClassWeights ClassWeights::ones(std::size_t num_classes) { return {std::vector<double>(num_classes, 1.0)}; }

ClassWeights class_weights(const ConfidentTargetSet& confident, const ClassWeights& previous) {
  if (confident.empty()) return previous;
  std::vector<double> mean(confident.num_classes, 0.0);
  for (const auto& m : confident.members) {
    if (m.probs.size() != mean.size()) throw DimensionError("class_weights: probability vector length mismatch");
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += m.probs[c];
  }
  for (double& v : mean) v /= static_cast<double>(confident.size());
  const double top = *std::max_element(mean.begin(), mean.end());
  for (double& v : mean) v /= top;
  return {std::move(mean)};
}

std::vector<double> vote_mass(const ConfidentTargetSet& confident) {
  std::vector<double> mass(confident.num_classes, 0.0);
  for (const auto& m : confident.members) {
    for (std::size_t c = 0; c < mass.size(); ++c) mass[c] += m.probs[c];
  }
  return mass;
}

nlohmann::json diagnostic_record(const ConfidentTargetSet& confident, const ClassWeights& weights) {
  return {{"threshold", confident.threshold},
          {"confident", confident.size()},
          {"candidates", confident.candidates},
          {"weights", weights.values},
          {"vote_mass", vote_mass(confident)}};
}

}  // namespace pda::alignment
