// core/src/tensor.cc
//
// Copyright 2026 The cvec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "cvec/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace cvec {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

namespace detail {

std::span<double> Node::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  return grad;
}

}  // namespace detail

Tensor::Tensor() = default;

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) {
      throw DimensionError("tensor dimensions must be positive, got " +
                           shape_to_string(shape));
    }
  }
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("shape " + shape_to_string(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(data.size()));
  }
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::ones(Shape shape, bool requires_grad) {
  return full(std::move(shape), 1.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({}, {value}, requires_grad);
}

Tensor Tensor::identity(std::size_t n) {
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 1.0;
  return Tensor({n, n}, std::move(d));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows,
                      bool requires_grad) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> d;
  d.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    d.insert(d.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(d), requires_grad);
}

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return Tensor({1, n}, std::move(values), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) throw GraphError("use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::numel() const { return node_ ? node_->data.size() : 0; }

std::size_t Tensor::rows() const {
  const Shape& s = shape();
  if (s.size() <= 1) return 1;
  if (s.size() == 2) return s[0];
  throw DimensionError("matrix view of rank-" + std::to_string(s.size()) +
                       " tensor " + shape_to_string(s));
}

std::size_t Tensor::cols() const {
  const Shape& s = shape();
  if (s.empty()) return 1;
  if (s.size() == 1) return s[0];
  if (s.size() == 2) return s[1];
  throw DimensionError("matrix view of rank-" + std::to_string(s.size()) +
                       " tensor " + shape_to_string(s));
}

std::span<const double> Tensor::data() const {
  if (!node_) throw GraphError("use of undefined tensor");
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!node_) throw GraphError("use of undefined tensor");
  if (!node_->is_leaf()) {
    throw GraphError("cannot mutate a recorded intermediate tensor");
  }
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on tensor of shape " +
                         shape_to_string(shape()));
  }
  return node_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  const std::size_t nc = cols();
  if (r >= rows() || c >= nc) throw DimensionError("index out of range");
  return node_->data[r * nc + c];
}

std::vector<double> Tensor::row_values(std::size_t r) const {
  const std::size_t nc = cols();
  if (r >= rows()) throw DimensionError("row index out of range");
  auto begin = node_->data.begin() + static_cast<std::ptrdiff_t>(r * nc);
  return {begin, begin + static_cast<std::ptrdiff_t>(nc)};
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

std::vector<double> Tensor::grad() const {
  if (!node_) throw GraphError("use of undefined tensor");
  if (node_->grad.empty()) return std::vector<double>(node_->data.size(), 0.0);
  return node_->grad;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

void Tensor::backward() const {
  if (!node_) throw GraphError("backward() on undefined tensor");
  if (node_->data.size() != 1) {
    throw GraphError("backward() needs a scalar loss, got shape " +
                     shape_to_string(node_->shape));
  }
  if (!node_->requires_grad) {
    throw GraphError(
        "backward() on a tensor that was not recorded from any "
        "gradient-tracking input");
  }
  if (node_->consumed) {
    throw GraphError("backward() already ran for this loss");
  }

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  // Intermediate gradients are scratch space; only leaves accumulate.
  for (detail::Node* n : order) {
    if (!n->is_leaf()) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
  node_->consumed = true;
}

Tensor Tensor::detach() const {
  if (!node_) return {};
  return Tensor(node_->shape, node_->data, false);
}

Tensor Tensor::clone() const {
  if (!node_) return {};
  return Tensor(node_->shape, node_->data, node_->requires_grad);
}

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

namespace {

template <typename Range>
Tensor make_result_impl(const char* op, Shape shape, std::vector<double> data,
                        const Range& inputs,
                        std::function<void(detail::Node&)> backward) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool track = false;
  for (const Tensor& t : inputs) track = track || t.requires_grad();
  if (track) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (const Tensor& t : inputs) node->parents.push_back(t.node());
    node->backward_fn = std::move(backward);
  }
  return Tensor::from_node(std::move(node));
}

}  // namespace

Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   std::initializer_list<Tensor> inputs,
                   std::function<void(detail::Node&)> backward) {
  return make_result_impl(op, std::move(shape), std::move(data), inputs,
                          std::move(backward));
}

Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   const std::vector<Tensor>& inputs,
                   std::function<void(detail::Node&)> backward) {
  return make_result_impl(op, std::move(shape), std::move(data), inputs,
                          std::move(backward));
}

}  // namespace cvec
