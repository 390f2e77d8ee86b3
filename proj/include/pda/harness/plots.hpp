#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pda/trainer.hpp"

namespace pda::harness {

/// Columns: step,l_class,l_adv,l_bc,l_wc,l_em,total,eta,lr.
std::string metrics_csv(const trainer::RunHistory& history);
/// Columns: event,class,weight. Event 0 is the initial all-ones vector; event
/// k is the k-th update.
std::string weights_csv(const trainer::RunHistory& history);
/// Columns: step,accuracy.
std::string accuracy_csv(const trainer::RunHistory& history);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

/// Self-contained line chart. Points are written in data units and mapped
/// into the fixed 800x400 viewBox by a group transform.
std::string svg_chart(const std::string& title, const std::string& x_label, std::span<const Series> series);

/// Writes loss.svg, weights.svg, accuracy.svg plus metrics.csv, weights.csv
/// and accuracy.csv into `dir`. Private classes are drawn dashed and flagged
/// in the legend. Returns the written paths.
std::vector<std::filesystem::path> emit_plots(const trainer::RunHistory& history, const std::filesystem::path& dir,
                                              std::span<const int> private_classes = {});

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pda::harness
