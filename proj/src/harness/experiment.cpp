#include "pda/harness/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>

#include "pda/checkpoint.hpp"
#include "pda/errors.hpp"
#include "pda/harness/plots.hpp"

namespace pda::harness {
namespace {

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

}  // namespace

LoadedData load_data(const ExperimentConfig& config) {
  LoadedData out;
  if (config.data.kind == DataConfig::Kind::synthetic) {
    data::PartialTaskSpec spec = config.data.synthetic;
    spec.seed = config.data.seed.value_or(config.seed);
    auto pair = data::generate_synthetic(spec);
    out.source = std::move(pair.source);
    out.target = std::move(pair.target);
    out.manifest = data::manifest(spec);
    out.shared = spec.shared_classes();
    out.private_classes = spec.private_classes();
    return out;
  }

  for (const auto& p : {config.data.source_csv, config.data.target_csv}) {
    if (!std::filesystem::exists(p)) throw IoError("dataset not found: " + p.string());
  }
  out.source = data::load_csv(config.data.source_csv, data::Domain::source);
  out.target = data::load_csv(config.data.target_csv, data::Domain::target);
  const auto source_classes = out.source.classes();
  if (!config.data.manifest.empty()) {
    std::ifstream in(config.data.manifest);
    if (!in) throw IoError("cannot read manifest " + config.data.manifest.string());
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("malformed manifest " + config.data.manifest.string() + ": " + e.what());
    }
    const auto spec = data::spec_from_manifest(doc);
    out.manifest = doc;
    out.shared = spec.shared_classes();
    out.private_classes = spec.private_classes();
  } else {
    // Without a manifest the partition comes from the evaluation labels.
    out.shared = out.target.classes();
    for (int c : source_classes) {
      if (!std::binary_search(out.shared.begin(), out.shared.end(), c)) out.private_classes.push_back(c);
    }
    out.manifest = {{"d", out.source.dim()},
                    {"num_source_classes", source_classes.size()},
                    {"target_classes", out.shared},
                    {"source", config.data.source_csv.string()},
                    {"target", config.data.target_csv.string()}};
  }
  return out;
}

nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [c, acc] : r.accuracy.per_class) {
    per_class[std::to_string(c)] = {{"accuracy", acc.accuracy()}, {"correct", acc.correct}, {"total", acc.total}};
  }
  nlohmann::json trajectory = nlohmann::json::array();
  trajectory.push_back(r.history.initial_weights.values);
  for (const auto& e : r.history.events) trajectory.push_back(e.weights.values);
  nlohmann::json final_losses;
  if (!r.history.steps.empty()) {
    const auto& l = r.history.steps.back().losses;
    final_losses = {{"l_class", l.l_class}, {"l_adv", l.l_adv}, {"l_bc", l.l_bc},
                    {"l_wc", l.l_wc},       {"l_em", l.l_em},   {"total", l.total}};
  }
  return {{"variant", r.variant},
          {"config", r.config},
          {"manifest", r.manifest},
          {"final_accuracy", r.accuracy.accuracy},
          {"per_class_accuracy", per_class},
          {"shared_classes", r.shared},
          {"private_classes", r.private_classes},
          {"weights",
           {{"final", r.final_weights.values},
            {"mean_shared", r.weights.mean_shared},
            {"mean_private", optional_json(r.weights.mean_private)},
            {"ratio", optional_json(r.weights.ratio)},
            {"trajectory", trajectory}}},
          {"loss_curves", {{"file", "metrics.csv"}, {"steps", r.history.steps.size()}, {"final", final_losses}}},
          {"importance_events", r.history.events.size()},
          {"timing", {{"wall_clock_seconds", r.wall_clock_seconds}}}};
}

ExperimentReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                const std::string& variant) {
  const auto started = std::chrono::steady_clock::now();
  LoadedData loaded = load_data(config);

  trainer::TrainConfig train = config.train;
  train.seed = config.seed;
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());
    if (train.checkpoint_every > 0) train.checkpoint_dir = out_dir;
  } else {
    train.checkpoint_every = 0;
  }

  const data::Dataset& target = loaded.target;
  trainer::EvaluationHook hook;
  if (target.has_evaluation_labels()) {
    hook = [&target](const networks::ModelBundle& model) { return evaluate(model, target).accuracy; };
  }
  trainer::TrainResult result = trainer::train(train, loaded.source, loaded.target, hook);

  ExperimentReport report;
  report.variant = variant;
  report.config = to_json(config);
  report.manifest = loaded.manifest;
  if (target.has_evaluation_labels()) report.accuracy = evaluate(result.model, target);
  report.final_weights =
      result.history.events.empty() ? result.history.initial_weights : result.history.events.back().weights;
  report.shared = loaded.shared;
  report.private_classes = loaded.private_classes;
  if (!report.shared.empty()) {
    report.weights = weight_diagnostics(report.final_weights, report.shared, report.private_classes);
  }
  report.history = std::move(result.history);
  report.model = std::move(result.model);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (!out_dir.empty()) {
    if (!report.history.steps.empty()) emit_plots(report.history, out_dir, report.private_classes);
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : report.history.events) {
      events.push_back({{"event", e.event},
                        {"step", e.step},
                        {"threshold", e.threshold},
                        {"confident", e.confident},
                        {"candidates", e.candidates},
                        {"weights", e.weights.values},
                        {"vote_mass", e.vote_mass}});
    }
    write_text(out_dir / "events.json", events.dump(2) + "\n");
    write_text(out_dir / "manifest.json", report.manifest.dump(2) + "\n");
    write_text(out_dir / "report.json", to_json(report).dump(2) + "\n");
    networks::save_checkpoint(out_dir / "model.json", report.model, static_cast<long>(report.history.steps.size()));
  }
  return report;
}

ExperimentReport run_experiment(const std::filesystem::path& config_path, const std::filesystem::path& out_dir) {
  return run_experiment(load_config(config_path), out_dir);
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::full:
      return "full";
    case Variant::no_adv:
      return "no_adv";
    case Variant::no_alignment:
      return "no_bc_wc";
    case Variant::no_selective:
      return "no_sv";
  }
  return "full";
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> variants{Variant::full, Variant::no_adv, Variant::no_alignment,
                                             Variant::no_selective};
  return variants;
}

ExperimentConfig apply_variant(ExperimentConfig config, Variant variant) {
  switch (variant) {
    case Variant::full:
      break;
    case Variant::no_adv:
      config.train.schedule.eta_max = 0.0;
      break;
    case Variant::no_alignment:
      config.train.hyper.alpha = 0.0;
      config.train.hyper.beta = 0.0;
      config.train.hyper.gamma = 0.0;
      break;
    case Variant::no_selective:
      config.train.threshold_mode = trainer::ThresholdMode::zero;
      break;
  }
  return config;
}

AblationResult run_ablation(const ExperimentConfig& config, const std::filesystem::path& out_dir, bool parallel) {
  const auto& variants = all_variants();
  const auto run_one = [&config, &out_dir](Variant v) {
    const std::string name = to_string(v);
    return run_experiment(apply_variant(config, v), out_dir.empty() ? out_dir : out_dir / name, name);
  };

  AblationResult result;
  if (parallel) {
    std::vector<std::future<ExperimentReport>> jobs;
    for (Variant v : variants) jobs.push_back(std::async(std::launch::async, run_one, v));
    for (auto& job : jobs) result.reports.push_back(job.get());
  } else {
    for (Variant v : variants) result.reports.push_back(run_one(v));
  }

  std::string csv = "variant,accuracy,mean_shared_weight,mean_private_weight,ratio\n";
  result.table = "| variant | target accuracy | mean W shared | mean W private | ratio |\n|---|---|---|---|---|\n";
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& r : result.reports) {
    const std::string priv = r.weights.mean_private ? fixed(*r.weights.mean_private) : "";
    const std::string ratio = r.weights.ratio ? fixed(*r.weights.ratio) : "";
    csv += r.variant + ',' + fixed(r.accuracy.accuracy, 6) + ',' + fixed(r.weights.mean_shared, 6) + ',' +
           (r.weights.mean_private ? fixed(*r.weights.mean_private, 6) : "") + ',' +
           (r.weights.ratio ? fixed(*r.weights.ratio, 6) : "") + '\n';
    result.table += "| " + r.variant + " | " + fixed(r.accuracy.accuracy) + " | " + fixed(r.weights.mean_shared) +
                    " | " + (priv.empty() ? "-" : priv) + " | " + (ratio.empty() ? "-" : ratio) + " |\n";
    summary.push_back({{"variant", r.variant},
                       {"accuracy", r.accuracy.accuracy},
                       {"mean_shared_weight", r.weights.mean_shared},
                       {"mean_private_weight", optional_json(r.weights.mean_private)},
                       {"ratio", optional_json(r.weights.ratio)}});
  }
  if (!out_dir.empty()) {
    write_text(out_dir / "ablation.csv", csv);
    write_text(out_dir / "ablation.md", result.table);
    write_text(out_dir / "ablation.json", summary.dump(2) + "\n");
  }
  return result;
}

}  // namespace pda::harness
