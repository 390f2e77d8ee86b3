#include "pda/diff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pda/errors.hpp"

namespace pda::diff {
namespace {

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
}

void require_matrix(const char* op, Var x) {
  if (x.value().rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(x.shape()));
  }
}

template <typename F>
Var unary_elementwise(const char* op, Var x, F forward, double (*derivative)(double in, double out)) {
  Tensor out = x.value();
  for (double& v : out.values()) v = forward(v);
  return x.graph->record(op, std::move(out), {x}, [derivative](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& in = ctx.input(0);
    const Tensor& y = ctx.output();
    const Tensor& g = ctx.grad_out();
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * derivative(in[i], y[i]);
  });
}

}  // namespace

Var affine(Var x, Var weight, Var bias) {
  require_matrix("affine", x);
  require_matrix("affine", weight);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  const std::size_t batch = xv.rows(), in = xv.cols(), outw = wv.cols();
  if (wv.rows() != in) {
    throw DimensionError("affine: input width " + std::to_string(in) + " does not match weight " +
                         shape_string(wv.shape()));
  }
  if (bv.rank() != 1 || bv.size() != outw) {
    throw DimensionError("affine: bias " + shape_string(bv.shape()) + " does not match output width " +
                         std::to_string(outw));
  }
  Tensor out(Shape{batch, outw});
  for (std::size_t i = 0; i < batch; ++i) {
    auto orow = out.row(i);
    std::copy(bv.values().begin(), bv.values().end(), orow.begin());
    for (std::size_t k = 0; k < in; ++k) {
      const double a = xv.at(i, k);
      if (a == 0.0) continue;
      const auto wrow = wv.row(k);
      for (std::size_t j = 0; j < outw; ++j) orow[j] += a * wrow[j];
    }
  }
  return x.graph->record("affine", std::move(out), {x, weight, bias}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_out();
    const Tensor& xv = ctx.input(0);
    const Tensor& wv = ctx.input(1);
    const std::size_t batch = xv.rows(), in = xv.cols(), outw = wv.cols();
    if (Tensor* gx = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < batch; ++i) {
        const auto grow = g.row(i);
        for (std::size_t k = 0; k < in; ++k) {
          const auto wrow = wv.row(k);
          double acc = 0.0;
          for (std::size_t j = 0; j < outw; ++j) acc += grow[j] * wrow[j];
          gx->at(i, k) += acc;
        }
      }
    }
    if (Tensor* gw = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < batch; ++i) {
        const auto grow = g.row(i);
        for (std::size_t k = 0; k < in; ++k) {
          const double a = xv.at(i, k);
          if (a == 0.0) continue;
          auto gwrow = gw->row(k);
          for (std::size_t j = 0; j < outw; ++j) gwrow[j] += a * grow[j];
        }
      }
    }
    if (Tensor* gb = ctx.input_grad(2)) {
      for (std::size_t i = 0; i < batch; ++i) {
        const auto grow = g.row(i);
        for (std::size_t j = 0; j < outw; ++j) (*gb)[j] += grow[j];
      }
    }
  });
}

Var relu(Var x) {
  return unary_elementwise(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var x) {
  return unary_elementwise(
      "tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var x) {
  return unary_elementwise(
      "sigmoid", x,
      [](double v) {
        // Saturation would round to exactly 0 or 1; keep one ulp inside.
        constexpr double lo = std::numeric_limits<double>::min();
        const double hi = std::nextafter(1.0, 0.0);
        if (v >= 0.0) return std::min(hi, 1.0 / (1.0 + std::exp(-v)));
        const double e = std::exp(v);
        return std::max(lo, e / (1.0 + e));
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var activation(Var x, Activation kind) { return kind == Activation::relu ? relu(x) : tanh(x); }

Var softmax(Var x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 1 && xv.rank() != 2) {
    throw DimensionError("softmax: expected a vector or matrix, got " + shape_string(xv.shape()));
  }
  if (xv.size() == 0 || xv.cols() == 0) throw DimensionError("softmax: empty input");
  if (!xv.all_finite()) throw NumericError("softmax: non-finite input");
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double top = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - top);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return x.graph->record("softmax", std::move(out), {x}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& y = ctx.output();
    const Tensor& g = ctx.grad_out();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const auto yr = y.row(r);
      const auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t j = 0; j < yr.size(); ++j) dot += gr[j] * yr[j];
      auto gxr = gx->row(r);
      for (std::size_t j = 0; j < yr.size(); ++j) gxr[j] += yr[j] * (gr[j] - dot);
    }
  });
}

Var log(Var x, double floor) {
  Tensor out = x.value();
  for (double& v : out.values()) v = std::log(std::max(v, floor));
  return x.graph->record("log", std::move(out), {x}, [floor](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& in = ctx.input(0);
    const Tensor& g = ctx.grad_out();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in[i] >= floor) (*gx)[i] += g[i] / in[i];
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.graph->record("add", std::move(out), {a, b}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_out();
    for (std::size_t k = 0; k < 2; ++k) {
      if (Tensor* gi = ctx.input_grad(k)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gi)[i] += g[i];
      }
    }
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.graph->record("sub", std::move(out), {a, b}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_out();
    if (Tensor* ga = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.graph->record("mul", std::move(out), {a, b}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_out();
    const Tensor& av = ctx.input(0);
    const Tensor& bv = ctx.input(1);
    if (Tensor* ga = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var scale(Var x, double factor) {
  Tensor out = x.value();
  for (double& v : out.values()) v *= factor;
  return x.graph->record("scale", std::move(out), {x}, [factor](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& g = ctx.grad_out();
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += factor * g[i];
  });
}

Var add_scalar(Var x, double offset) {
  Tensor out = x.value();
  for (double& v : out.values()) v += offset;
  return x.graph->record("add_scalar", std::move(out), {x}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& g = ctx.grad_out();
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
  });
}

Var square(Var x) {
  return unary_elementwise(
      "square", x, [](double v) { return v * v; }, [](double in, double) { return 2.0 * in; });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  return x.graph->record("sum", Tensor::scalar(total), {x}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const double g = ctx.grad_out()[0];
    for (double& v : gx->values()) v += g;
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw UsageError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var reverse_gradient(Var x, double lambda) {
  if (!(lambda >= 0.0)) throw UsageError("reverse_gradient: lambda must be non-negative");
  return x.graph->record("reverse_gradient", x.value(), {x}, [lambda](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& g = ctx.grad_out();
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] -= lambda * g[i];
  });
}

Var reshape(Var x, Shape shape) {
  if (shape_size(shape) != x.value().size()) {
    throw DimensionError("reshape: " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  Tensor out(std::move(shape), x.value().data());
  return x.graph->record("reshape", std::move(out), {x}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& g = ctx.grad_out();
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
  });
}

Var gather_rows(Var x, std::span<const std::size_t> rows) {
  require_matrix("gather_rows", x);
  const Tensor& xv = x.value();
  const std::size_t cols = xv.cols();
  Tensor out(Shape{rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.rows()) throw DimensionError("gather_rows: row index out of range");
    const auto src = xv.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<std::size_t> index(rows.begin(), rows.end());
  return x.graph->record("gather_rows", std::move(out), {x}, [index = std::move(index)](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& g = ctx.grad_out();
    for (std::size_t i = 0; i < index.size(); ++i) {
      const auto gr = g.row(i);
      auto dst = gx->row(index[i]);
      for (std::size_t j = 0; j < gr.size(); ++j) dst[j] += gr[j];
    }
  });
}

Var concat_rows(Var top, Var bottom) {
  require_matrix("concat_rows", top);
  require_matrix("concat_rows", bottom);
  const Tensor& a = top.value();
  const Tensor& b = bottom.value();
  if (a.cols() != b.cols()) {
    throw DimensionError("concat_rows: widths " + std::to_string(a.cols()) + " and " + std::to_string(b.cols()));
  }
  std::vector<double> values(a.data());
  values.insert(values.end(), b.data().begin(), b.data().end());
  Tensor out(Shape{a.rows() + b.rows(), a.cols()}, std::move(values));
  const std::size_t split = a.size();
  return top.graph->record("concat_rows", std::move(out), {top, bottom}, [split](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_out();
    if (Tensor* ga = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < split; ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = split; i < g.size(); ++i) (*gb)[i - split] += g[i];
    }
  });
}

Var mean_rows(Var x) {
  require_matrix("mean_rows", x);
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), cols = xv.cols();
  if (n == 0) throw UsageError("mean_rows: no rows");
  Tensor out(Shape{cols});
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = xv.row(i);
    for (std::size_t j = 0; j < cols; ++j) out[j] += r[j];
  }
  for (double& v : out.values()) v /= static_cast<double>(n);
  return x.graph->record("mean_rows", std::move(out), {x}, [n](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& g = ctx.grad_out();
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = gx->row(i);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] += g[j] * inv;
    }
  });
}

Var pick(Var x, std::span<const int> columns) {
  require_matrix("pick", x);
  const Tensor& xv = x.value();
  if (columns.size() != xv.rows()) {
    throw DimensionError("pick: " + std::to_string(columns.size()) + " indices for " + std::to_string(xv.rows()) +
                         " rows");
  }
  Tensor out(Shape{columns.size()});
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] < 0 || static_cast<std::size_t>(columns[i]) >= xv.cols()) {
      throw UsageError("pick: column " + std::to_string(columns[i]) + " outside [0, " + std::to_string(xv.cols()) +
                       ")");
    }
    out[i] = xv.at(i, static_cast<std::size_t>(columns[i]));
  }
  std::vector<int> index(columns.begin(), columns.end());
  return x.graph->record("pick", std::move(out), {x}, [index = std::move(index)](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& g = ctx.grad_out();
    for (std::size_t i = 0; i < index.size(); ++i) gx->at(i, static_cast<std::size_t>(index[i])) += g[i];
  });
}

Var l2_norm(Var x) {
  double sq = 0.0;
  for (double v : x.value().values()) sq += v * v;
  return x.graph->record("l2_norm", Tensor::scalar(std::sqrt(sq)), {x}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    const double norm = ctx.output()[0];
    if (!gx || norm == 0.0) return;
    const double g = ctx.grad_out()[0] / norm;
    const Tensor& xv = ctx.input(0);
    for (std::size_t i = 0; i < xv.size(); ++i) (*gx)[i] += g * xv[i];
  });
}

Var sum_pairwise_sq_dist(Var x) {
  require_matrix("sum_pairwise_sq_dist", x);
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = xv.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = xv.row(j);
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        total += d * d;
      }
    }
  }
  // Each unordered pair appears twice among ordered pairs.
  return x.graph->record("sum_pairwise_sq_dist", Tensor::scalar(2.0 * total), {x}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& xv = ctx.input(0);
    const std::size_t n = xv.rows(), cols = xv.cols();
    std::vector<double> col_sum(cols, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = xv.row(i);
      for (std::size_t j = 0; j < cols; ++j) col_sum[j] += r[j];
    }
    const double g = 4.0 * ctx.grad_out()[0];
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = xv.row(i);
      auto out = gx->row(i);
      for (std::size_t j = 0; j < cols; ++j) out[j] += g * (dn * r[j] - col_sum[j]);
    }
  });
}

}  // namespace pda::diff
