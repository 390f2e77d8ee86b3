#include "pda/harness/plots.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "pda/errors.hpp"

namespace pda::harness {
namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 400.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 170.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string metrics_csv(const trainer::RunHistory& history) {
  std::string out = "step,l_class,l_adv,l_bc,l_wc,l_em,total,eta,lr\n";
  for (const auto& r : history.steps) {
    const auto& l = r.losses;
    out += std::to_string(r.step) + ',' + num(l.l_class) + ',' + num(l.l_adv) + ',' + num(l.l_bc) + ',' +
           num(l.l_wc) + ',' + num(l.l_em) + ',' + num(l.total) + ',' + num(r.eta) + ',' + num(r.lr) + '\n';
  }
  return out;
}

std::string weights_csv(const trainer::RunHistory& history) {
  std::string out = "event,class,weight\n";
  const auto emit = [&out](std::size_t event, const alignment::ClassWeights& w) {
    for (std::size_t c = 0; c < w.size(); ++c) {
      out += std::to_string(event) + ',' + std::to_string(c) + ',' + num(w[c]) + '\n';
    }
  };
  emit(0, history.initial_weights);
  for (const auto& e : history.events) emit(e.event + 1, e.weights);
  return out;
}

std::string accuracy_csv(const trainer::RunHistory& history) {
  std::string out = "step,accuracy\n";
  for (const auto& e : history.evaluations) out += std::to_string(e.step) + ',' + num(e.accuracy) + '\n';
  return out;
}

std::string svg_chart(const std::string& title, const std::string& x_label, std::span<const Series> series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0;
  if (!(y0 <= y1)) y0 = 0.0, y1 = 1.0;
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const double sx = plot_w / (x1 - x0);
  const double sy = plot_h / (y1 - y0);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
  svg << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"#444\"/>\n";
  svg << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  svg << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kMarginTop + 4 << "\" text-anchor=\"end\">"
      << short_num(y1) << "</text>\n";
  svg << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kMarginTop + plot_h << "\" text-anchor=\"end\">"
      << short_num(y0) << "</text>\n";
  svg << "<text x=\"" << kMarginLeft << "\" y=\"" << kMarginTop + plot_h + 16 << "\">" << short_num(x0)
      << "</text>\n";
  svg << "<text x=\"" << kMarginLeft + plot_w << "\" y=\"" << kMarginTop + plot_h + 16
      << "\" text-anchor=\"end\">" << short_num(x1) << "</text>\n";

  // Data-to-viewBox mapping: x' = left + (x - x0) sx, y' = top + plot_h - (y - y0) sy.
  svg << "<g transform=\"translate(" << num(kMarginLeft - x0 * sx) << ' ' << num(kMarginTop + plot_h + y0 * sy)
      << ") scale(" << num(sx) << ' ' << num(-sy) << ")\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    svg << "<polyline data-series=\"" << escape(s.name) << "\" fill=\"none\" stroke=\""
        << kPalette[i % std::size(kPalette)] << "\" stroke-width=\"1.5\" vector-effect=\"non-scaling-stroke\"";
    if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
    svg << " points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (k) svg << ' ';
      svg << num(s.x[k]) << ',' << num(s.y[k]);
    }
    svg << "\"/>\n";
  }
  svg << "</g>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kMarginTop + 10 + 18.0 * static_cast<double>(i);
    const double x = kWidth - kMarginRight + 12;
    svg << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 22 << "\" y2=\"" << y << "\" stroke=\""
        << kPalette[i % std::size(kPalette)] << "\" stroke-width=\"2\"";
    if (series[i].dashed) svg << " stroke-dasharray=\"6 4\"";
    svg << "/>\n<text x=\"" << x + 28 << "\" y=\"" << y + 4 << "\">" << escape(series[i].name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::filesystem::path> emit_plots(const trainer::RunHistory& history, const std::filesystem::path& dir,
                                              std::span<const int> private_classes) {
  if (history.steps.empty()) throw UsageError("emit_plots: empty history");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());

  std::vector<double> steps;
  for (const auto& r : history.steps) steps.push_back(static_cast<double>(r.step));
  const auto loss_series = [&](const char* name, double losses::LossBreakdown::*field) {
    Series s{name, steps, {}, false};
    for (const auto& r : history.steps) s.y.push_back(r.losses.*field);
    return s;
  };
  const std::vector<Series> losses{loss_series("l_class", &losses::LossBreakdown::l_class),
                                   loss_series("l_adv", &losses::LossBreakdown::l_adv),
                                   loss_series("l_bc", &losses::LossBreakdown::l_bc),
                                   loss_series("l_wc", &losses::LossBreakdown::l_wc),
                                   loss_series("l_em", &losses::LossBreakdown::l_em),
                                   loss_series("total", &losses::LossBreakdown::total)};

  std::vector<Series> weights;
  const std::size_t classes = history.initial_weights.size();
  for (std::size_t c = 0; c < classes; ++c) {
    const bool is_private =
        std::find(private_classes.begin(), private_classes.end(), static_cast<int>(c)) != private_classes.end();
    Series s{"class " + std::to_string(c) + (is_private ? " (private)" : ""), {0.0}, {history.initial_weights[c]},
             is_private};
    for (const auto& e : history.events) {
      s.x.push_back(static_cast<double>(e.step));
      s.y.push_back(e.weights[c]);
    }
    weights.push_back(std::move(s));
  }

  std::vector<Series> accuracy;
  if (!history.evaluations.empty()) {
    Series s{"target accuracy", {}, {}, false};
    for (const auto& e : history.evaluations) {
      s.x.push_back(static_cast<double>(e.step));
      s.y.push_back(e.accuracy);
    }
    accuracy.push_back(std::move(s));
  }

  const std::vector<std::pair<std::string, std::string>> files{
      {"metrics.csv", metrics_csv(history)},
      {"weights.csv", weights_csv(history)},
      {"accuracy.csv", accuracy_csv(history)},
      {"loss.svg", svg_chart("Loss terms", "step", losses)},
      {"weights.svg", svg_chart("Class-importance weights", "step", weights)},
      {"accuracy.svg", svg_chart("Target accuracy", "step", accuracy)},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : files) {
    write_text(dir / name, text);
    written.push_back(dir / name);
  }
  return written;
}

}  // namespace pda::harness
