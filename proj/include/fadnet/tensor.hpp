#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fadnet/errors.hpp"
#include "fadnet/rng.hpp"

// Dense 64-bit float tensors with reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a shared node. Operations record their
// inputs and a backward rule on the output node, so the DAG is built
// implicitly in creation order. backward() on a scalar loss walks the DAG
// once in reverse topological order and accumulates dLoss/dNode into the
// grad buffer of every gradient-tracking node.
//
// Layout is fixed: (batch, channel, height, width) for image-like data,
// row-major, innermost axis contiguous. Tensors are immutable once they
// participate in a graph; grad buffers are the only mutable state and are
// reset explicitly (zero_grad), never implicitly by backward().

namespace fadnet {

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until first accumulation
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;  // null for leaves
  const char* op = "leaf";

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), 0.0, requires_grad);
  }

  static Tensor filled(Shape shape, double value, bool requires_grad = false) {
    auto node = std::make_shared<detail::TensorNode>();
    const std::int64_t n = numel_of(shape);
    if (n < 0) throw ShapeError("negative extent in shape " + shape_str(shape));
    node->shape = std::move(shape);
    node->data.assign(static_cast<std::size_t>(n), value);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false) {
    if (numel_of(shape) != static_cast<std::int64_t>(data.size())) {
      throw ShapeError("data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
    auto node = std::make_shared<detail::TensorNode>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return from_data({1}, {v}, requires_grad);
  }

  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (auto& v : t.node_->data) v = stddev * rng.gaussian();
    return t;
  }

  static Tensor rand_uniform(Shape shape, Rng& rng, double lo = 0.0, double hi = 1.0,
                             bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (auto& v : t.node_->data) v = rng.uniform(lo, hi);
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t ndim() const { return static_cast<std::int64_t>(node_->shape.size()); }
  std::int64_t extent(std::int64_t axis) const { return node_->shape[static_cast<std::size_t>(axis)]; }
  std::int64_t numel() const { return node_->numel(); }

  const std::vector<double>& values() const { return node_->data; }
  // Mutation is only legal before the tensor is used as an op input.
  std::vector<double>& values() { return node_->data; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const {
    if (node_->grad.empty()) {
      throw ContractError("grad accessed before backward populated it (op: " +
                          std::string(node_->op) + ")");
    }
    return node_->grad;
  }
  void zero_grad() {
    if (!node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
  }

  bool is_leaf() const { return node_->parents.empty(); }
  const char* op_name() const { return node_->op; }

  double at(std::initializer_list<std::int64_t> idx) const {
    return node_->data[static_cast<std::size_t>(offset_of(idx))];
  }

  std::int64_t offset_of(std::initializer_list<std::int64_t> idx) const {
    if (static_cast<std::int64_t>(idx.size()) != ndim()) {
      throw AxisError("index rank " + std::to_string(idx.size()) + " vs tensor rank " +
                      std::to_string(ndim()));
    }
    std::int64_t off = 0;
    std::size_t d = 0;
    for (auto i : idx) {
      off = off * node_->shape[d] + i;
      ++d;
    }
    return off;
  }

  // Runs reverse-mode differentiation from this scalar. Grads accumulate;
  // callers reset via zero_grad between passes.
  void backward() const;

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

  // Builds an op output node wired to its inputs. The backward rule sees the
  // output node (with its grad populated) and accumulates into the parents.
  static Tensor make_op(const char* op, Shape shape, std::vector<double> data,
                        std::vector<Tensor> inputs,
                        std::function<void(detail::TensorNode&)> backward_fn) {
    Tensor out = from_data(std::move(shape), std::move(data));
    out.node_->op = op;
    bool track = false;
    for (const auto& in : inputs) track = track || in.requires_grad();
    if (track) {
      out.node_->requires_grad = true;
      out.node_->parents.reserve(inputs.size());
      for (auto& in : inputs) out.node_->parents.push_back(in.node_);
      out.node_->backward_fn = std::move(backward_fn);
    }
    return out;
  }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::TensorNode> node_;
};

namespace detail {

// Reverse topological order by iterative post-order DFS over parents.
inline std::vector<TensorNode*> topo_order(TensorNode* root) {
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // parents precede children
}

}  // namespace detail

inline void Tensor::backward() const {
  if (!defined()) throw ContractError("backward on an undefined tensor");
  if (numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + shape_str(shape()));
  }
  if (!node_->requires_grad) return;
  auto order = detail::topo_order(node_.get());
  // Leaf grads accumulate across calls; every interior node restarts so the
  // pass propagates exactly dLoss/dNode.
  for (auto* n : order) {
    if (!n->parents.empty()) n->grad.clear();
  }
  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

}  // namespace fadnet
