#include "pda/oracle.hpp"

#include <cmath>

namespace pda::oracle {
namespace {

std::vector<double> normalise_exp(const std::vector<double>& v) {
  double denom = 0.0;
  for (double x : v) denom += std::exp(x);
  std::vector<double> out;
  for (double x : v) out.push_back(std::exp(x) / denom);
  return out;
}

double js_bits(const std::vector<double>& p, const std::vector<double>& q) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = (p[i] + q[i]) / 2.0;
    if (p[i] > 0.0) total += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) total += 0.5 * q[i] * std::log(q[i] / m);
  }
  return total / std::log(2.0);
}

std::vector<double> phi(const std::vector<double>& z, const Rows& centers) {
  const auto pz = normalise_exp(z);
  std::vector<double> out;
  for (const auto& mu : centers) out.push_back(1.0 - js_bits(pz, normalise_exp(mu)) / 2.0);
  return out;
}

}  // namespace

Expected recompute(const Instance& in, bool zero_threshold) {
  Expected out;
  const std::size_t k = in.num_classes;
  const std::size_t dim = in.source.front().size();

  out.centers.assign(k, std::vector<double>(dim, 0.0));
  std::vector<double> counts(k, 0.0);
  for (std::size_t i = 0; i < in.source.size(); ++i) {
    const auto c = static_cast<std::size_t>(in.source_labels[i]);
    counts[c] += 1.0;
    for (std::size_t j = 0; j < dim; ++j) out.centers[c][j] += in.source[i][j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < dim; ++j) out.centers[c][j] /= counts[c];
  }

  double sum_max = 0.0;
  for (const auto& z : in.source) {
    const auto p = normalise_exp(phi(z, out.centers));
    double best = p[0];
    for (double v : p) best = v > best ? v : best;
    sum_max += best;
  }
  out.threshold = zero_threshold ? 0.0 : sum_max / static_cast<double>(in.source.size());

  std::vector<double> mean(k, 0.0);
  for (std::size_t t = 0; t < in.target.size(); ++t) {
    out.target_similarity.push_back(phi(in.target[t], out.centers));
    out.target_probs.push_back(normalise_exp(out.target_similarity.back()));
    const auto& p = out.target_probs.back();
    int arg = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (p[c] > p[static_cast<std::size_t>(arg)]) arg = static_cast<int>(c);
    }
    out.pseudo_labels.push_back(arg);
    if (p[static_cast<std::size_t>(arg)] >= out.threshold) {
      out.confident.push_back(t);
      for (std::size_t c = 0; c < k; ++c) mean[c] += p[c];
    }
  }

  if (out.confident.empty()) {
    out.weights = in.previous_weights;
    return out;
  }
  double top = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    mean[c] /= static_cast<double>(out.confident.size());
    top = mean[c] > top ? mean[c] : top;
  }
  for (std::size_t c = 0; c < k; ++c) out.weights.push_back(mean[c] / top);
  return out;
}

}  // namespace pda::oracle
