// core/include/cvec/tensor.h
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

#ifndef CVEC_TENSOR_H_
#define CVEC_TENSOR_H_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvec {

using Shape = std::vector<std::size_t>;

/// Raised when operand shapes are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised on non-finite values or degenerate numerics (zero norms etc).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on misuse of the autodiff graph (non-scalar loss, double backward).
class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  bool consumed = false;     // set on a loss node once backward() has run
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const { return parents.empty(); }
  std::span<double> ensure_grad();
};

}  // namespace detail

/// Dense row-major tensor of doubles. Copies share storage (handle
/// semantics); use clone() for a deep copy. Tensors created by operations on
/// gradient-tracking inputs remember their parents so backward() can replay
/// the computation in reverse.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor ones(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor identity(std::size_t n);
  // Row-major matrix literal, e.g. Tensor::matrix({{1, 2}, {3, 4}}).
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);
  static Tensor row(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  // Matrix views: rank-0 is 1x1, rank-1 of length n is 1xn.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  // Only valid on leaves; mutating recorded intermediates would desync the
  // graph.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t r, std::size_t c) const;
  std::vector<double> row_values(std::size_t r) const;

  bool requires_grad() const;
  // Gradient view; all zeros if nothing has been accumulated yet.
  std::vector<double> grad() const;
  bool has_grad() const;
  void zero_grad();

  // Reverse-mode sweep from this scalar. Gradients accumulate additively into
  // every reachable leaf with requires_grad.
  void backward() const;

  Tensor detach() const;
  Tensor clone() const;

  // Internal: used by ops to build the graph.
  static Tensor from_node(std::shared_ptr<detail::Node> node);
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Builds an op result. If any input tracks gradients, the result records
/// `inputs` as parents and `backward` as its reverse rule.
Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   std::initializer_list<Tensor> inputs,
                   std::function<void(detail::Node&)> backward);
Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   const std::vector<Tensor>& inputs,
                   std::function<void(detail::Node&)> backward);

}  // namespace cvec

#endif  // CVEC_TENSOR_H_
