#include "pda/harness/config.hpp"

#include <fstream>
#include <set>

#include "pda/errors.hpp"

namespace pda::harness {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw SchemaError(prefix.empty() ? "<root>" : prefix, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!keys.count(item.key())) {
      throw SchemaError(prefix.empty() ? item.key() : prefix + "." + item.key(), "unknown key");
    }
  }
}

template <typename T>
void read(const json& obj, const std::string& prefix, const char* key, T& out) {
  if (!obj.contains(key)) return;
  const std::string name = prefix + "." + key;
  const json& v = obj.at(key);
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw SchemaError(name, "expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) {
        throw SchemaError(name, "expected a non-negative integer");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw SchemaError(name, "expected a string");
    }
    out = v.get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(name, e.what());
  }
}

template <typename Enum, typename Parse>
void read_enum(const json& obj, const std::string& prefix, const char* key, Enum& out, Parse parse) {
  std::string text;
  read(obj, prefix, key, text);
  if (text.empty()) return;
  try {
    out = parse(text);
  } catch (const UsageError& e) {
    throw SchemaError(prefix + "." + key, e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void parse_data(const json& j, const std::filesystem::path& base, DataConfig& data) {
  std::string kind = "synthetic";
  read(j, "data", "kind", kind);
  if (kind == "synthetic") {
    reject_unknown(j, "data",
                   {"kind", "num_source_classes", "target_classes", "samples_per_class", "dim", "radius",
                    "cluster_std", "rotation_deg", "translation", "noise", "seed"});
    data.kind = DataConfig::Kind::synthetic;
    auto& s = data.synthetic;
    read(j, "data", "num_source_classes", s.num_source_classes);
    read(j, "data", "target_classes", s.target_classes);
    read(j, "data", "samples_per_class", s.samples_per_class);
    read(j, "data", "dim", s.dim);
    read(j, "data", "radius", s.radius);
    read(j, "data", "cluster_std", s.cluster_std);
    read(j, "data", "rotation_deg", s.rotation_deg);
    read(j, "data", "translation", s.translation);
    read(j, "data", "noise", s.noise);
    if (j.contains("seed")) {
      std::uint64_t seed = 0;
      read(j, "data", "seed", seed);
      data.seed = seed;
    }
    try {
      s.validate();
    } catch (const UsageError& e) {
      throw SchemaError("data", e.what());
    }
  } else if (kind == "csv") {
    reject_unknown(j, "data", {"kind", "source", "target", "manifest"});
    data.kind = DataConfig::Kind::csv;
    std::string source, target, manifest;
    read(j, "data", "source", source);
    read(j, "data", "target", target);
    read(j, "data", "manifest", manifest);
    if (source.empty()) throw SchemaError("data.source", "required for csv data");
    if (target.empty()) throw SchemaError("data.target", "required for csv data");
    data.source_csv = resolve(base, source);
    data.target_csv = resolve(base, target);
    if (!manifest.empty()) data.manifest = resolve(base, manifest);
  } else {
    throw SchemaError("data.kind", "expected 'synthetic' or 'csv'");
  }
}

void parse_model(const json& j, trainer::TrainConfig& t) {
  reject_unknown(j, "model", {"feature_hidden", "bottleneck", "discriminator_hidden", "activation"});
  read(j, "model", "feature_hidden", t.feature_hidden);
  read(j, "model", "bottleneck", t.bottleneck);
  read(j, "model", "discriminator_hidden", t.discriminator_hidden);
  read_enum(j, "model", "activation", t.activation, networks::parse_activation);
  if (t.bottleneck == 0) throw SchemaError("model.bottleneck", "must be positive");
  for (std::size_t w : t.feature_hidden) {
    if (w == 0) throw SchemaError("model.feature_hidden", "widths must be positive");
  }
  for (std::size_t w : t.discriminator_hidden) {
    if (w == 0) throw SchemaError("model.discriminator_hidden", "widths must be positive");
  }
}

void parse_train(const json& j, trainer::TrainConfig& t) {
  reject_unknown(j, "train",
                 {"batch_size", "steps", "base_lr", "momentum", "new_layer_lr_mult", "alpha", "beta", "gamma",
                  "eta_max", "eta_gamma", "lr_alpha", "lr_beta", "cadence", "threshold_mode", "threshold_rule",
                  "adv_target_form", "eval_every", "checkpoint_every"});
  read(j, "train", "batch_size", t.batch_size);
  read(j, "train", "steps", t.steps);
  read(j, "train", "base_lr", t.base_lr);
  read(j, "train", "momentum", t.momentum);
  read(j, "train", "new_layer_lr_mult", t.new_layer_lr_mult);
  read(j, "train", "alpha", t.hyper.alpha);
  read(j, "train", "beta", t.hyper.beta);
  read(j, "train", "gamma", t.hyper.gamma);
  read(j, "train", "eta_max", t.schedule.eta_max);
  read(j, "train", "eta_gamma", t.schedule.eta_gamma);
  read(j, "train", "lr_alpha", t.schedule.lr_alpha);
  read(j, "train", "lr_beta", t.schedule.lr_beta);
  read(j, "train", "cadence", t.cadence);
  read_enum(j, "train", "threshold_mode", t.threshold_mode, trainer::parse_threshold_mode);
  read_enum(j, "train", "threshold_rule", t.threshold_rule, trainer::parse_threshold_rule);
  read_enum(j, "train", "adv_target_form", t.adv_target_form, losses::parse_adv_target_form);
  read(j, "train", "eval_every", t.eval_every);
  read(j, "train", "checkpoint_every", t.checkpoint_every);
  try {
    t.validate();
  } catch (const UsageError& e) {
    throw SchemaError("train", e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  reject_unknown(doc, "", {"seed", "data", "model", "train"});
  ExperimentConfig config;
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) throw SchemaError("seed", "expected a non-negative integer");
    config.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("data")) parse_data(doc.at("data"), base_dir, config.data);
  if (doc.contains("model")) parse_model(doc.at("model"), config.train);
  if (doc.contains("train")) parse_train(doc.at("train"), config.train);
  config.train.seed = config.seed;
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw SchemaError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json to_json(const ExperimentConfig& c) {
  json data;
  if (c.data.kind == DataConfig::Kind::synthetic) {
    const auto& s = c.data.synthetic;
    data = {{"kind", "synthetic"},
            {"num_source_classes", s.num_source_classes},
            {"target_classes", s.target_classes},
            {"samples_per_class", s.samples_per_class},
            {"dim", s.dim},
            {"radius", s.radius},
            {"cluster_std", s.cluster_std},
            {"rotation_deg", s.rotation_deg},
            {"translation", s.translation},
            {"noise", s.noise}};
    if (c.data.seed) data["seed"] = *c.data.seed;
  } else {
    data = {{"kind", "csv"}, {"source", c.data.source_csv.string()}, {"target", c.data.target_csv.string()}};
    if (!c.data.manifest.empty()) data["manifest"] = c.data.manifest.string();
  }
  const auto& t = c.train;
  return {{"seed", c.seed},
          {"data", data},
          {"model",
           {{"feature_hidden", t.feature_hidden},
            {"bottleneck", t.bottleneck},
            {"discriminator_hidden", t.discriminator_hidden},
            {"activation", networks::to_string(t.activation)}}},
          {"train",
           {{"batch_size", t.batch_size},
            {"steps", t.steps},
            {"base_lr", t.base_lr},
            {"momentum", t.momentum},
            {"new_layer_lr_mult", t.new_layer_lr_mult},
            {"alpha", t.hyper.alpha},
            {"beta", t.hyper.beta},
            {"gamma", t.hyper.gamma},
            {"eta_max", t.schedule.eta_max},
            {"eta_gamma", t.schedule.eta_gamma},
            {"lr_alpha", t.schedule.lr_alpha},
            {"lr_beta", t.schedule.lr_beta},
            {"cadence", t.cadence},
            {"threshold_mode", trainer::to_string(t.threshold_mode)},
            {"threshold_rule", trainer::to_string(t.threshold_rule)},
            {"adv_target_form", losses::to_string(t.adv_target_form)},
            {"eval_every", t.eval_every},
            {"checkpoint_every", t.checkpoint_every}}}};
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.train.seed = seed;
}

}  // namespace pda::harness
