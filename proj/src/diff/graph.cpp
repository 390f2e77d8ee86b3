#include "pda/diff/graph.hpp"

#include <string>

#include "pda/errors.hpp"

namespace pda::diff {

const Tensor& Var::value() const { return graph->value(id); }
const Tensor& Var::grad() const { return graph->grad(id); }
bool Var::requires_grad() const { return graph->requires_grad(id); }

const Tensor& BackwardContext::grad_out() const { return graph_.nodes_[node_].grad; }
const Tensor& BackwardContext::output() const { return graph_.nodes_[node_].value; }

const Tensor& BackwardContext::input(std::size_t k) const {
  return graph_.nodes_[graph_.nodes_[node_].inputs.at(k)].value;
}

Tensor* BackwardContext::input_grad(std::size_t k) {
  auto& in = graph_.nodes_[graph_.nodes_[node_].inputs.at(k)];
  return in.requires_grad ? &in.grad : nullptr;
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.grad = requires_grad ? Tensor(value.shape()) : Tensor(Shape{0});
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite output from '") + op + "'");
  }
  Node node;
  node.op = op;
  node.is_leaf = false;
  for (const Var& in : inputs) {
    if (in.graph != this) throw UsageError(std::string("'") + op + "' mixes variables from different graphs");
    node.inputs.push_back(in.id);
    node.requires_grad = node.requires_grad || nodes_[in.id].requires_grad;
  }
  node.grad = node.requires_grad ? Tensor(value.shape()) : Tensor(Shape{0});
  node.value = std::move(value);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Graph::backward(Var root) {
  if (root.graph != this) throw UsageError("backward() root belongs to another graph");
  Node& top = nodes_.at(root.id);
  if (top.value.size() != 1) {
    throw UsageError("backward() needs a scalar root, got shape " + shape_string(top.value.shape()));
  }
  if (!top.requires_grad) return;
  for (auto& node : nodes_) {
    if (!node.is_leaf && node.requires_grad) node.grad.fill(0.0);
  }
  top.grad[0] += 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || !node.backward) continue;
    BackwardContext ctx(*this, i);
    node.backward(ctx);
  }
  for (std::size_t i = 0; i <= root.id; ++i) {
    const Node& node = nodes_[i];
    if (node.is_leaf && node.requires_grad && !node.grad.all_finite()) {
      throw NumericError("non-finite gradient reached leaf " + std::to_string(i));
    }
  }
}

void Graph::zero_grad() {
  for (auto& node : nodes_) {
    if (node.requires_grad) node.grad.fill(0.0);
  }
}

}  // namespace pda::diff
