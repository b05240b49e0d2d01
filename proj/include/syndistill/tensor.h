// Copyright 2026 The syndistill Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal reverse-mode automatic differentiation.
//
// A Tensor is a shared handle to a node in a dynamically built DAG. Every
// primitive records its parents and a closure that pushes the output gradient
// into them. backward() topologically sorts the DAG reachable from a scalar
// loss (the "tape") and replays the closures in reverse order.
//
// Tensors are row-major. Most primitives treat a tensor as a matrix of
// rows() x cols(), where cols() is the last dimension and a rank-1 tensor is a
// single row. Elementwise binary ops accept equal shapes, or a right operand
// with a single row that is broadcast over the leading dimension.
//
// Both float and double instantiations are provided; float is used for
// training and double for gradient checks.

#ifndef SYNDISTILL_TENSOR_H_
#define SYNDISTILL_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace syndistill {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Raised on any operand shape mismatch. The message names both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Real>
struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  bool is_leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), Real(0));
  }
};

template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, Real v, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Real> values,
                     bool requires_grad = false);
  static Tensor scalar(Real v, bool requires_grad = false);
  // Internal: wraps a freshly computed op result.
  static Tensor from_node(std::shared_ptr<Node<Real>> node);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const Real> data() const { return node_->value; }
  std::span<Real> mutable_data() { return node_->value; }
  Real at(std::size_t i) const { return node_->value[i]; }
  Real at(std::size_t r, std::size_t c) const {
    return node_->value[r * cols() + c];
  }
  Real item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return !node_->grad.empty(); }
  // Zeros when no gradient has been accumulated yet.
  std::vector<Real> grad() const;
  std::span<const Real> grad_span() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  // Constant copy, cut from the graph.
  Tensor detach() const;

  // Reverse pass from this scalar. Leaf gradients accumulate across calls;
  // interior gradients are recomputed each time.
  void backward() const;

  Node<Real>* node() const { return node_.get(); }
  const std::shared_ptr<Node<Real>>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node<Real>> node) : node_(std::move(node)) {}
  std::shared_ptr<Node<Real>> node_;
};

// Topologically ordered nodes reachable from a loss, parents first.
template <typename Real>
class Tape {
 public:
  static Tape build(const Tensor<Real>& loss);
  const std::vector<Node<Real>*>& order() const { return order_; }
  std::size_t size() const { return order_.size(); }

 private:
  std::vector<Node<Real>*> order_;
};

// Uniform [0, 1) from the top 53 bits; stable across standard libraries.
double uniform01(std::mt19937_64& rng);

// ---- Primitives -----------------------------------------------------------

template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> transpose(const Tensor<Real>& a);
template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> scale(const Tensor<Real>& a, Real factor);
template <typename Real>
Tensor<Real> add_scalar(const Tensor<Real>& a, Real offset);

template <typename Real>
Tensor<Real> sigmoid(const Tensor<Real>& a);
template <typename Real>
Tensor<Real> tanh(const Tensor<Real>& a);
template <typename Real>
Tensor<Real> relu(const Tensor<Real>& a);
template <typename Real>
Tensor<Real> exp(const Tensor<Real>& a);
template <typename Real>
Tensor<Real> log(const Tensor<Real>& a);
// Along the last axis.
template <typename Real>
Tensor<Real> softmax(const Tensor<Real>& a);
template <typename Real>
Tensor<Real> log_softmax(const Tensor<Real>& a);

template <typename Real>
Tensor<Real> sum(const Tensor<Real>& a);
template <typename Real>
Tensor<Real> mean(const Tensor<Real>& a);
// Column sums: [rows, cols] -> [1, cols].
template <typename Real>
Tensor<Real> sum_rows(const Tensor<Real>& a);
// Sum of the entries at the given flat indices (repeats count twice).
template <typename Real>
Tensor<Real> pick_sum(const Tensor<Real>& a, std::span<const std::size_t> idx);

template <typename Real>
Tensor<Real> concat_cols(std::span<const Tensor<Real>> parts);
template <typename Real>
Tensor<Real> concat_rows(std::span<const Tensor<Real>> parts);
template <typename Real>
Tensor<Real> slice_cols(const Tensor<Real>& a, std::size_t begin,
                        std::size_t end);
template <typename Real>
Tensor<Real> slice_rows(const Tensor<Real>& a, std::size_t begin,
                        std::size_t end);
// Row gather; this is also the embedding lookup.
template <typename Real>
Tensor<Real> gather_rows(const Tensor<Real>& a,
                         std::span<const std::size_t> rows);
template <typename Real>
Tensor<Real> embedding(const Tensor<Real>& table, std::span<const int> ids);
template <typename Real>
Tensor<Real> reshape(const Tensor<Real>& a, Shape shape);

// Inverted dropout: kept entries are scaled by 1 / (1 - p). Identity when
// !training or p == 0.
template <typename Real>
Tensor<Real> dropout(const Tensor<Real>& a, double p, bool training,
                     std::mt19937_64& rng);

// Convenience operators.
template <typename Real>
Tensor<Real> operator+(const Tensor<Real>& a, const Tensor<Real>& b) {
  return add(a, b);
}
template <typename Real>
Tensor<Real> operator-(const Tensor<Real>& a, const Tensor<Real>& b) {
  return sub(a, b);
}
template <typename Real>
Tensor<Real> operator*(const Tensor<Real>& a, const Tensor<Real>& b) {
  return mul(a, b);
}

}  // namespace syndistill

#endif  // SYNDISTILL_TENSOR_H_
