#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "pda/diff/tensor.hpp"

namespace pda::diff {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid as long as the graph is.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  double item() const { return value().item(); }
  bool requires_grad() const;
};

/// What a primitive sees while propagating its output gradient to its inputs.
class BackwardContext {
 public:
  BackwardContext(Graph& graph, std::size_t node) : graph_(graph), node_(node) {}

  const Tensor& grad_out() const;
  const Tensor& output() const;
  const Tensor& input(std::size_t k) const;
  /// Gradient buffer of input k, or nullptr when that input is not differentiated.
  Tensor* input_grad(std::size_t k);

 private:
  Graph& graph_;
  std::size_t node_;
};

using BackwardFn = std::function<void(BackwardContext&)>;

/// Computation record for reverse-mode differentiation.
///
/// Nodes are appended in execution order, so every node's inputs precede it
/// and a reverse sweep over ids is a valid topological order. Leaf gradients
/// accumulate across backward() calls; call zero_grad() between steps.
/// A graph is not thread-safe; build one per thread.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Appends the result of a primitive. Throws NumericError if `value` is not finite.
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);

  void backward(Var root);
  void zero_grad();

  std::size_t size() const noexcept { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  const Tensor& grad(std::size_t id) const { return nodes_.at(id).grad; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  bool is_leaf(std::size_t id) const { return nodes_.at(id).is_leaf; }
  const char* op_name(std::size_t id) const { return nodes_.at(id).op; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }

 private:
  friend class BackwardContext;

  struct Node {
    const char* op = "leaf";
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool is_leaf = true;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

}  // namespace pda::diff
