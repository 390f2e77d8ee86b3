// Command-line harness: data generation, training, ablations, evaluation and
// the built-in verification suites.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "pda/checkpoint.hpp"
#include "pda/errors.hpp"
#include "pda/harness/checks.hpp"
#include "pda/harness/experiment.hpp"
#include "pda/harness/plots.hpp"

namespace {

using namespace pda;

struct RunOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::string threshold_mode;
  bool ablate = false;
  bool serial = false;
};

harness::ExperimentConfig resolve(const RunOptions& opts) {
  harness::ExperimentConfig config = harness::load_config(opts.config);
  if (opts.seed) harness::override_seed(config, *opts.seed);
  if (!opts.threshold_mode.empty()) config.train.threshold_mode = trainer::parse_threshold_mode(opts.threshold_mode);
  return config;
}

void print_report(const harness::ExperimentReport& r) {
  std::printf("variant %s: target accuracy %.4f", r.variant.c_str(), r.accuracy.accuracy);
  std::printf(", mean W shared %.4f", r.weights.mean_shared);
  if (r.weights.mean_private) std::printf(", mean W private %.4f", *r.weights.mean_private);
  std::printf(" (%.1fs)\n", r.wall_clock_seconds);
}

int run_train(const RunOptions& opts) {
  const auto config = resolve(opts);
  if (opts.ablate) {
    const auto result = harness::run_ablation(config, opts.out, !opts.serial);
    for (const auto& r : result.reports) print_report(r);
    std::cout << '\n' << result.table;
    return 0;
  }
  print_report(harness::run_experiment(config, opts.out));
  return 0;
}

int run_generate(const RunOptions& opts) {
  const auto config = resolve(opts);
  const auto loaded = harness::load_data(config);
  std::filesystem::create_directories(opts.out);
  const std::filesystem::path out(opts.out);
  data::write_csv(out / "source.csv", loaded.source);
  data::write_csv(out / "target.csv", loaded.target);
  harness::write_text(out / "manifest.json", loaded.manifest.dump(2) + "\n");
  std::printf("wrote %zu source and %zu target samples to %s\n", loaded.source.size(), loaded.target.size(),
              opts.out.c_str());
  return 0;
}

int run_evaluate(const std::string& checkpoint, const std::string& dataset) {
  const auto model = networks::load_checkpoint(checkpoint);
  const auto data = data::load_csv(dataset, data::Domain::target);
  const auto metrics = harness::evaluate(model, data);
  std::printf("accuracy %.6f (%zu/%zu)\n", metrics.accuracy, metrics.correct, metrics.total);
  for (const auto& [c, acc] : metrics.per_class) {
    std::printf("  class %d: %.6f (%zu/%zu)\n", c, acc.accuracy(), acc.correct, acc.total);
  }
  return 0;
}

int run_gradcheck(std::size_t trials, std::uint64_t seed, double eps, double tolerance) {
  bool ok = true;
  for (const auto& r : harness::run_gradient_suite(trials, seed, eps)) {
    const bool pass = r.max_error <= tolerance;
    ok = ok && pass;
    std::printf("%-8s trials=%zu max_rel_error=%.3e %s\n", r.name.c_str(), r.trials, r.max_error,
                pass ? "PASS" : "FAIL");
  }
  return ok ? 0 : 1;
}

int run_oracle(std::size_t instances, std::uint64_t seed, double tolerance) {
  const auto r = harness::run_oracle_suite(instances, seed);
  const bool pass = r.max_abs_diff <= tolerance && r.label_mismatches == 0 && r.membership_mismatches == 0;
  std::printf("instances=%zu max_abs_diff=%.3e label_mismatches=%zu membership_mismatches=%zu %s\n", r.instances,
              r.max_abs_diff, r.label_mismatches, r.membership_mismatches, pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

void add_run_options(CLI::App* cmd, RunOptions& opts, bool with_ablate) {
  cmd->add_option("--config", opts.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out, "output directory");
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--threshold-mode", opts.threshold_mode, "eq7 or zero")->check(CLI::IsMember({"eq7", "zero"}));
  if (with_ablate) cmd->add_flag("--ablate", opts.ablate, "run the full model and the three ablations");
  cmd->add_flag("--serial", opts.serial, "run ablation variants one after another");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial domain adaptation with selective voting"};
  app.require_subcommand(1);

  RunOptions gen_opts, train_opts, ablate_opts;
  auto* gen = app.add_subcommand("generate", "write the configured synthetic datasets as CSV");
  add_run_options(gen, gen_opts, false);
  auto* train = app.add_subcommand("train", "train, evaluate and write a report");
  add_run_options(train, train_opts, true);
  auto* ablate = app.add_subcommand("ablate", "full model plus the three ablations under one seed");
  add_run_options(ablate, ablate_opts, false);

  std::string checkpoint, dataset;
  auto* eval = app.add_subcommand("evaluate", "score a checkpoint on a labelled CSV");
  eval->add_option("--checkpoint", checkpoint, "model checkpoint (JSON)")->required();
  eval->add_option("--data", dataset, "target CSV with labels")->required();

  std::size_t trials = 20;
  std::uint64_t check_seed = 1;
  double eps = 1e-4, grad_tol = 1e-4;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every loss term");
  grad->add_option("--trials", trials, "random batches per loss");
  grad->add_option("--seed", check_seed);
  grad->add_option("--eps", eps);
  grad->add_option("--tolerance", grad_tol);

  std::size_t instances = 100;
  double oracle_tol = 1e-10;
  auto* oracle = app.add_subcommand("oracle-check", "brute-force cross-check of the weighting pipeline");
  oracle->add_option("--instances", instances);
  oracle->add_option("--seed", check_seed);
  oracle->add_option("--tolerance", oracle_tol);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return run_generate(gen_opts);
    if (*train) return run_train(train_opts);
    if (*ablate) {
      ablate_opts.ablate = true;
      return run_train(ablate_opts);
    }
    if (*eval) return run_evaluate(checkpoint, dataset);
    if (*grad) return run_gradcheck(trials, check_seed, eps, grad_tol);
    if (*oracle) return run_oracle(instances, check_seed, oracle_tol);
  } catch (const pda::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
