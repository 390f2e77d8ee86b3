#include "pda/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "pda/errors.hpp"

namespace pda::data {
namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Domain domain) { return domain == Domain::source ? "source" : "target"; }

Dataset::Dataset(Domain domain, Tensor features, std::vector<int> labels)
    : domain_(domain), features_(std::move(features)), labels_(std::move(labels)) {
  if (features_.rank() != 2) throw DimensionError("Dataset features must be a matrix");
  if (features_.rows() != labels_.size()) throw DimensionError("Dataset needs one label per feature row");
  dim_ = features_.cols();
}

Tensor Dataset::rows(std::span<const std::size_t> index) const {
  Tensor out(diff::Shape{index.size(), dim_});
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto src = features_.row(index[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Sample Dataset::sample(std::size_t i) const {
  const auto row = features_.row(i);
  return {std::vector<double>(row.begin(), row.end()), labels_.at(i), domain_};
}

std::span<const int> Dataset::labels() const {
  if (domain_ != Domain::source) throw UsageError("target labels are reserved for evaluation");
  return labels_;
}

std::vector<int> Dataset::labels_at(std::span<const std::size_t> index) const {
  const auto all = labels();
  std::vector<int> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) out[i] = all[index[i]];
  return out;
}

bool Dataset::has_evaluation_labels() const noexcept {
  return std::all_of(labels_.begin(), labels_.end(), [](int y) { return y >= 0; });
}

std::vector<int> Dataset::classes() const {
  std::set<int> seen;
  for (int y : labels_) {
    if (y >= 0) seen.insert(y);
  }
  return {seen.begin(), seen.end()};
}

Dataset Dataset::with_labels(std::vector<int> labels) const { return Dataset(domain_, features_, std::move(labels)); }

void PartialTaskSpec::validate() const {
  if (num_source_classes == 0) throw UsageError("the source needs at least one class");
  if (dim < 2) throw UsageError("synthetic data needs dim >= 2");
  if (target_classes.empty()) throw UsageError("the target class set must be non-empty");
  std::set<int> seen;
  for (int c : target_classes) {
    if (c < 0 || static_cast<std::size_t>(c) >= num_source_classes) {
      throw UsageError("target class " + std::to_string(c) + " is not a source class");
    }
    if (!seen.insert(c).second) throw UsageError("target class " + std::to_string(c) + " listed twice");
  }
  if (translation.size() > dim) throw UsageError("translation has more entries than dim");
  if (samples_per_class == 0) throw UsageError("samples_per_class must be positive");
  if (cluster_std < 0.0 || noise < 0.0) throw UsageError("spreads must be non-negative");
}

std::vector<int> PartialTaskSpec::shared_classes() const {
  std::vector<int> out = target_classes;
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> PartialTaskSpec::private_classes() const {
  const auto shared = shared_classes();
  std::vector<int> out;
  for (std::size_t c = 0; c < num_source_classes; ++c) {
    if (!std::binary_search(shared.begin(), shared.end(), static_cast<int>(c))) out.push_back(static_cast<int>(c));
  }
  return out;
}

std::vector<double> class_center(const PartialTaskSpec& spec, int c) {
  std::vector<double> mu(spec.dim, 0.0);
  const double angle = 2.0 * std::numbers::pi * c / static_cast<double>(spec.num_source_classes);
  mu[0] = spec.radius * std::cos(angle);
  mu[1] = spec.radius * std::sin(angle);
  return mu;
}

std::vector<double> apply_shift(const PartialTaskSpec& spec, std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  const double theta = spec.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  out[0] = c * x[0] - s * x[1];
  out[1] = s * x[0] + c * x[1];
  for (std::size_t i = 0; i < spec.translation.size(); ++i) out[i] += spec.translation[i];
  return out;
}

DomainPair generate_synthetic(const PartialTaskSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = spec.samples_per_class;

  std::vector<double> source_values;
  std::vector<int> source_labels;
  for (std::size_t c = 0; c < spec.num_source_classes; ++c) {
    const auto mu = class_center(spec, static_cast<int>(c));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < spec.dim; ++j) source_values.push_back(mu[j] + spec.cluster_std * gauss(rng));
      source_labels.push_back(static_cast<int>(c));
    }
  }

  std::vector<double> target_values;
  std::vector<int> target_labels;
  for (int c : spec.shared_classes()) {
    const auto mu = class_center(spec, c);
    std::vector<double> x(spec.dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < spec.dim; ++j) x[j] = mu[j] + spec.cluster_std * gauss(rng);
      auto shifted = apply_shift(spec, x);
      for (double& v : shifted) v += spec.noise * gauss(rng);
      target_values.insert(target_values.end(), shifted.begin(), shifted.end());
      target_labels.push_back(c);
    }
  }

  const std::size_t ns = source_labels.size(), nt = target_labels.size();
  return {Dataset(Domain::source, Tensor::matrix(ns, spec.dim, std::move(source_values)), std::move(source_labels)),
          Dataset(Domain::target, Tensor::matrix(nt, spec.dim, std::move(target_values)), std::move(target_labels))};
}

nlohmann::json manifest(const PartialTaskSpec& spec) {
  std::vector<double> translation = spec.translation;
  return {{"d", spec.dim},
          {"num_source_classes", spec.num_source_classes},
          {"target_classes", spec.shared_classes()},
          {"samples_per_class", spec.samples_per_class},
          {"radius", spec.radius},
          {"cluster_std", spec.cluster_std},
          {"seed", spec.seed},
          {"shift", {{"rotation_deg", spec.rotation_deg}, {"translation", translation}, {"noise", spec.noise}}}};
}

PartialTaskSpec spec_from_manifest(const nlohmann::json& doc) {
  try {
    PartialTaskSpec spec;
    spec.dim = doc.at("d").get<std::size_t>();
    spec.num_source_classes = doc.at("num_source_classes").get<std::size_t>();
    spec.target_classes = doc.at("target_classes").get<std::vector<int>>();
    spec.samples_per_class = doc.value("samples_per_class", spec.samples_per_class);
    spec.radius = doc.value("radius", spec.radius);
    spec.cluster_std = doc.value("cluster_std", spec.cluster_std);
    spec.seed = doc.value("seed", spec.seed);
    if (doc.contains("shift")) {
      const auto& shift = doc.at("shift");
      spec.rotation_deg = shift.value("rotation_deg", spec.rotation_deg);
      spec.translation = shift.value("translation", spec.translation);
      spec.noise = shift.value("noise", spec.noise);
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed manifest: ") + e.what());
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t j = 0; j < dataset.dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  const auto labels = dataset.evaluation_labels();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.features().row(i)) out << format_double(v) << ',';
    if (labels[i] >= 0) out << labels[i];
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Dataset load_csv(const std::filesystem::path& path, Domain role) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset " + path.string());
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header", 1);
  ++line_no;
  const auto header = split_commas(trim(line));
  if (header.size() < 2 || trim(header.back()) != "label") {
    throw ParseError(path.string() + ": header must be f0,...,f{d-1},label", line_no);
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (trim(header[j]) != "f" + std::to_string(j)) {
      throw ParseError(path.string() + ": header column " + std::to_string(j) + " should be f" + std::to_string(j),
                       line_no);
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != dim + 1) {
      throw ParseError(path.string() + ": expected " + std::to_string(dim + 1) + " fields, got " +
                           std::to_string(cells.size()),
                       line_no);
    }
    for (std::size_t j = 0; j < dim; ++j) {
      double v = 0.0;
      if (!parse_double(trim(cells[j]), v)) {
        throw ParseError(path.string() + ": non-numeric feature '" + cells[j] + "'", line_no);
      }
      values.push_back(v);
    }
    const std::string label = trim(cells[dim]);
    if (label.empty()) {
      labels.push_back(-1);
      continue;
    }
    int y = 0;
    const auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), y);
    if (ec != std::errc() || ptr != label.data() + label.size() || y < 0) {
      throw ParseError(path.string() + ": invalid label '" + label + "'", line_no);
    }
    labels.push_back(y);
  }
  const std::size_t n = labels.size();
  return Dataset(role, Tensor::matrix(n, dim, std::move(values)), std::move(labels));
}

BatchSampler::BatchSampler(std::size_t dataset_size, std::uint64_t seed)
    : size_(dataset_size), rng_(seed), order_(dataset_size) {
  if (dataset_size == 0) throw UsageError("BatchSampler over an empty dataset");
  reshuffle();
}

void BatchSampler::reshuffle() {
  for (std::size_t i = 0; i < size_; ++i) order_[i] = i;
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

std::vector<std::size_t> BatchSampler::next(std::size_t batch_size) {
  if (batch_size == 0) throw UsageError("batch_size must be at least 1");
  if (cursor_ == size_) {
    reshuffle();
    ++epoch_;
  }
  const std::size_t take = std::min(batch_size, size_ - cursor_);
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + take));
  cursor_ += take;
  return batch;
}

}  // namespace pda::data
