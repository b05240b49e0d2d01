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

#include "syndistill/tensor.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace syndistill {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace {

template <typename Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using MapMat = Eigen::Map<RowMat<Real>>;
template <typename Real>
using ConstMapMat = Eigen::Map<const RowMat<Real>>;

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) +
                   " vs " + shape_str(b));
}

template <typename Real>
std::shared_ptr<Node<Real>> make_node(
    Shape shape, const char* op,
    std::initializer_list<const Tensor<Real>*> parents) {
  auto node = std::make_shared<Node<Real>>();
  node->value.assign(numel(shape), Real(0));
  node->shape = std::move(shape);
  node->op = op;
  node->is_leaf = false;
  bool needs = false;
  for (const Tensor<Real>* p : parents) needs = needs || p->requires_grad();
  if (needs) {
    node->requires_grad = true;
    for (const Tensor<Real>* p : parents) node->parents.push_back(p->node_ptr());
  }
  return node;
}

template <typename Real>
std::shared_ptr<Node<Real>> make_node_list(Shape shape, const char* op,
                                           std::span<const Tensor<Real>> parents) {
  auto node = std::make_shared<Node<Real>>();
  node->value.assign(numel(shape), Real(0));
  node->shape = std::move(shape);
  node->op = op;
  node->is_leaf = false;
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.requires_grad();
  if (needs) {
    node->requires_grad = true;
    for (const auto& p : parents) node->parents.push_back(p.node_ptr());
  }
  return node;
}

// Parent gradient buffer, or nullptr when that parent needs no gradient.
template <typename Real>
Real* parent_grad(Node<Real>& self, std::size_t k) {
  Node<Real>& p = *self.parents[k];
  if (!p.requires_grad) return nullptr;
  p.ensure_grad();
  return p.grad.data();
}

// Equal shapes, or b is a single row broadcast over a's rows.
template <typename Real>
bool check_binary(const char* op, const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() == b.shape()) return false;
  if (b.rows() == 1 && b.size() == a.cols() && a.rank() >= 1) return true;
  shape_mismatch(op, a.shape(), b.shape());
}

template <typename Real>
Shape matrix_shape(const Tensor<Real>& t) {
  return {t.rows(), t.cols()};
}

template <typename Real, typename F, typename DF>
Tensor<Real> unary(const Tensor<Real>& a, const char* op, F f, DF df) {
  auto node = make_node<Real>(a.shape(), op, {&a});
  const auto in = a.data();
  for (std::size_t i = 0; i < in.size(); ++i) node->value[i] = f(in[i]);
  if (node->requires_grad) {
    // df receives (input, output).
    node->backward = [df](Node<Real>& self) {
      Real* ga = parent_grad(self, 0);
      if (!ga) return;
      const auto& x = self.parents[0]->value;
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        ga[i] += self.grad[i] * df(x[i], self.value[i]);
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

}  // namespace

// ---- Tensor ---------------------------------------------------------------

template <typename Real>
Tensor<Real> Tensor<Real>::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), Real(0), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::filled(Shape shape, Real v, bool requires_grad) {
  auto node = std::make_shared<Node<Real>>();
  node->value.assign(numel(shape), v);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename Real>
Tensor<Real> Tensor<Real>::from(Shape shape, std::vector<Real> values,
                                bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " holds " +
                     std::to_string(numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  auto node = std::make_shared<Node<Real>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename Real>
Tensor<Real> Tensor<Real>::scalar(Real v, bool requires_grad) {
  return from({}, {v}, requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::from_node(std::shared_ptr<Node<Real>> node) {
  return Tensor(std::move(node));
}

template <typename Real>
std::size_t Tensor<Real>::rows() const {
  const Shape& s = node_->shape;
  if (s.size() <= 1) return 1;
  return s.back() == 0 ? numel(Shape(s.begin(), s.end() - 1)) : size() / s.back();
}

template <typename Real>
std::size_t Tensor<Real>::cols() const {
  const Shape& s = node_->shape;
  return s.empty() ? 1 : s.back();
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (size() != 1) {
    throw ShapeError("item: expected a single value, got shape " +
                     shape_str(shape()));
  }
  return node_->value[0];
}

template <typename Real>
void Tensor<Real>::set_requires_grad(bool on) {
  node_->requires_grad = on;
}

template <typename Real>
std::vector<Real> Tensor<Real>::grad() const {
  if (node_->grad.empty()) return std::vector<Real>(size(), Real(0));
  return node_->grad;
}

template <typename Real>
Tensor<Real> Tensor<Real>::detach() const {
  return from(shape(), node_->value, false);
}

template <typename Real>
Tape<Real> Tape<Real>::build(const Tensor<Real>& loss) {
  Tape tape;
  if (!loss.requires_grad()) return tape;
  std::unordered_set<const Node<Real>*> seen;
  // Iterative post-order DFS; parents are emitted before children.
  std::vector<std::pair<Node<Real>*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<Real>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      tape.order_.push_back(node);
      stack.pop_back();
    }
  }
  return tape;
}

template <typename Real>
void Tensor<Real>::backward() const {
  if (size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " +
                     shape_str(shape()));
  }
  if (!requires_grad()) {
    throw std::logic_error("backward: loss does not depend on any parameter");
  }
  Tape<Real> tape = Tape<Real>::build(*this);
  for (Node<Real>* n : tape.order()) {
    if (!n->is_leaf) n->grad.assign(n->value.size(), Real(0));
  }
  node_->ensure_grad();
  node_->grad[0] += Real(1);
  const auto& order = tape.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Real>* n = *it;
    if (n->backward) n->backward(*n);
  }
}

// ---- Primitives -----------------------------------------------------------

template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.rank() > 2 || b.rank() != 2 || a.cols() != b.rows()) {
    shape_mismatch("matmul", a.shape(), b.shape());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  auto node = make_node<Real>({m, n}, "matmul", {&a, &b});
  MapMat<Real>(node->value.data(), m, n).noalias() =
      ConstMapMat<Real>(a.data().data(), m, k) *
      ConstMapMat<Real>(b.data().data(), k, n);
  if (node->requires_grad) {
    node->backward = [m, k, n](Node<Real>& self) {
      ConstMapMat<Real> g(self.grad.data(), m, n);
      if (Real* ga = parent_grad(self, 0)) {
        MapMat<Real>(ga, m, k).noalias() +=
            g * ConstMapMat<Real>(self.parents[1]->value.data(), k, n).transpose();
      }
      if (Real* gb = parent_grad(self, 1)) {
        MapMat<Real>(gb, k, n).noalias() +=
            ConstMapMat<Real>(self.parents[0]->value.data(), m, k).transpose() * g;
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> transpose(const Tensor<Real>& a) {
  if (a.rank() > 2) shape_mismatch("transpose", a.shape(), {});
  const std::size_t m = a.rows(), n = a.cols();
  auto node = make_node<Real>({n, m}, "transpose", {&a});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) node->value[j * m + i] = a.data()[i * n + j];
  if (node->requires_grad) {
    node->backward = [m, n](Node<Real>& self) {
      if (Real* ga = parent_grad(self, 0)) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

namespace {

// sign = +1 for add, -1 for sub.
template <typename Real>
Tensor<Real> add_like(const Tensor<Real>& a, const Tensor<Real>& b, Real sign,
                      const char* op) {
  const bool bcast = check_binary(op, a, b);
  auto node = make_node<Real>(a.shape(), op, {&a, &b});
  const auto x = a.data();
  const auto y = b.data();
  const std::size_t cols = bcast ? b.size() : 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    node->value[i] = x[i] + sign * y[bcast ? i % cols : i];
  if (node->requires_grad) {
    node->backward = [sign, bcast, cols](Node<Real>& self) {
      if (Real* ga = parent_grad(self, 0)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
      }
      if (Real* gb = parent_grad(self, 1)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          gb[bcast ? i % cols : i] += sign * self.grad[i];
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

}  // namespace

template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  return add_like(a, b, Real(1), "add");
}

template <typename Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
  return add_like(a, b, Real(-1), "sub");
}

template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  const bool bcast = check_binary("mul", a, b);
  auto node = make_node<Real>(a.shape(), "mul", {&a, &b});
  const auto x = a.data();
  const auto y = b.data();
  const std::size_t cols = bcast ? b.size() : 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    node->value[i] = x[i] * y[bcast ? i % cols : i];
  if (node->requires_grad) {
    node->backward = [bcast, cols](Node<Real>& self) {
      const auto& x = self.parents[0]->value;
      const auto& y = self.parents[1]->value;
      if (Real* ga = parent_grad(self, 0)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          ga[i] += self.grad[i] * y[bcast ? i % cols : i];
      }
      if (Real* gb = parent_grad(self, 1)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          gb[bcast ? i % cols : i] += self.grad[i] * x[i];
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> scale(const Tensor<Real>& a, Real factor) {
  return unary<Real>(
      a, "scale", [factor](Real x) { return x * factor; },
      [factor](Real, Real) { return factor; });
}

template <typename Real>
Tensor<Real> add_scalar(const Tensor<Real>& a, Real offset) {
  return unary<Real>(
      a, "add_scalar", [offset](Real x) { return x + offset; },
      [](Real, Real) { return Real(1); });
}

template <typename Real>
Tensor<Real> sigmoid(const Tensor<Real>& a) {
  return unary<Real>(
      a, "sigmoid",
      [](Real x) {
        if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
        const Real e = std::exp(x);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); });
}

template <typename Real>
Tensor<Real> tanh(const Tensor<Real>& a) {
  return unary<Real>(
      a, "tanh", [](Real x) { return std::tanh(x); },
      [](Real, Real y) { return Real(1) - y * y; });
}

template <typename Real>
Tensor<Real> relu(const Tensor<Real>& a) {
  return unary<Real>(
      a, "relu", [](Real x) { return x > 0 ? x : Real(0); },
      [](Real x, Real) { return x > 0 ? Real(1) : Real(0); });
}

template <typename Real>
Tensor<Real> exp(const Tensor<Real>& a) {
  return unary<Real>(
      a, "exp", [](Real x) { return std::exp(x); }, [](Real, Real y) { return y; });
}

template <typename Real>
Tensor<Real> log(const Tensor<Real>& a) {
  return unary<Real>(
      a, "log", [](Real x) { return std::log(x); },
      [](Real x, Real) { return Real(1) / x; });
}

template <typename Real>
Tensor<Real> softmax(const Tensor<Real>& a) {
  if (a.size() == 0 || a.cols() == 0) {
    throw ShapeError("softmax: empty axis in shape " + shape_str(a.shape()));
  }
  const std::size_t m = a.rows(), n = a.cols();
  auto node = make_node<Real>(a.shape(), "softmax", {&a});
  const auto x = a.data();
  for (std::size_t r = 0; r < m; ++r) {
    const Real* in = x.data() + r * n;
    Real* out = node->value.data() + r * n;
    const Real mx = *std::max_element(in, in + n);
    Real z = 0;
    for (std::size_t c = 0; c < n; ++c) z += (out[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < n; ++c) out[c] /= z;
  }
  if (node->requires_grad) {
    node->backward = [m, n](Node<Real>& self) {
      Real* ga = parent_grad(self, 0);
      if (!ga) return;
      for (std::size_t r = 0; r < m; ++r) {
        const Real* y = self.value.data() + r * n;
        const Real* g = self.grad.data() + r * n;
        Real dot = 0;
        for (std::size_t c = 0; c < n; ++c) dot += g[c] * y[c];
        for (std::size_t c = 0; c < n; ++c) ga[r * n + c] += y[c] * (g[c] - dot);
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> log_softmax(const Tensor<Real>& a) {
  if (a.size() == 0 || a.cols() == 0) {
    throw ShapeError("log_softmax: empty axis in shape " + shape_str(a.shape()));
  }
  const std::size_t m = a.rows(), n = a.cols();
  auto node = make_node<Real>(a.shape(), "log_softmax", {&a});
  const auto x = a.data();
  for (std::size_t r = 0; r < m; ++r) {
    const Real* in = x.data() + r * n;
    Real* out = node->value.data() + r * n;
    const Real mx = *std::max_element(in, in + n);
    Real z = 0;
    for (std::size_t c = 0; c < n; ++c) z += std::exp(in[c] - mx);
    const Real lz = mx + std::log(z);
    for (std::size_t c = 0; c < n; ++c) out[c] = in[c] - lz;
  }
  if (node->requires_grad) {
    node->backward = [m, n](Node<Real>& self) {
      Real* ga = parent_grad(self, 0);
      if (!ga) return;
      for (std::size_t r = 0; r < m; ++r) {
        const Real* y = self.value.data() + r * n;
        const Real* g = self.grad.data() + r * n;
        Real gs = 0;
        for (std::size_t c = 0; c < n; ++c) gs += g[c];
        for (std::size_t c = 0; c < n; ++c)
          ga[r * n + c] += g[c] - std::exp(y[c]) * gs;
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> sum(const Tensor<Real>& a) {
  auto node = make_node<Real>({}, "sum", {&a});
  Real s = 0;
  for (Real v : a.data()) s += v;
  node->value[0] = s;
  if (node->requires_grad) {
    node->backward = [](Node<Real>& self) {
      if (Real* ga = parent_grad(self, 0)) {
        const std::size_t n = self.parents[0]->value.size();
        for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[0];
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> mean(const Tensor<Real>& a) {
  if (a.size() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(a), Real(1) / static_cast<Real>(a.size()));
}

template <typename Real>
Tensor<Real> sum_rows(const Tensor<Real>& a) {
  const std::size_t m = a.rows(), n = a.cols();
  auto node = make_node<Real>({1, n}, "sum_rows", {&a});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) node->value[c] += a.data()[r * n + c];
  if (node->requires_grad) {
    node->backward = [m, n](Node<Real>& self) {
      if (Real* ga = parent_grad(self, 0)) {
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < n; ++c) ga[r * n + c] += self.grad[c];
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> pick_sum(const Tensor<Real>& a, std::span<const std::size_t> idx) {
  auto node = make_node<Real>({}, "pick_sum", {&a});
  Real s = 0;
  for (std::size_t i : idx) {
    if (i >= a.size()) {
      throw std::out_of_range("pick_sum: index " + std::to_string(i) +
                              " outside shape " + shape_str(a.shape()));
    }
    s += a.data()[i];
  }
  node->value[0] = s;
  if (node->requires_grad) {
    std::vector<std::size_t> kept(idx.begin(), idx.end());
    node->backward = [kept = std::move(kept)](Node<Real>& self) {
      if (Real* ga = parent_grad(self, 0)) {
        for (std::size_t i : kept) ga[i] += self.grad[0];
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> concat_cols(std::span<const Tensor<Real>> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t m = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) shape_mismatch("concat_cols", parts[0].shape(), p.shape());
    widths.push_back(p.cols());
    total += p.cols();
  }
  auto node = make_node_list<Real>({m, total}, "concat_cols", parts);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t r = 0; r < m; ++r)
      std::copy_n(p.data().data() + r * w, w, node->value.data() + r * total + off);
    off += w;
  }
  if (node->requires_grad) {
    node->backward = [m, total, widths = std::move(widths)](Node<Real>& self) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < widths.size(); ++k) {
        const std::size_t w = widths[k];
        if (Real* gp = parent_grad(self, k)) {
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < w; ++c)
              gp[r * w + c] += self.grad[r * total + off + c];
        }
        off += w;
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> concat_rows(std::span<const Tensor<Real>> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const std::size_t n = parts[0].cols();
  std::vector<std::size_t> sizes;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.cols() != n) shape_mismatch("concat_rows", parts[0].shape(), p.shape());
    sizes.push_back(p.size());
    total += p.rows();
  }
  auto node = make_node_list<Real>({total, n}, "concat_rows", parts);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), node->value.begin() + off);
    off += p.size();
  }
  if (node->requires_grad) {
    node->backward = [sizes = std::move(sizes)](Node<Real>& self) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (Real* gp = parent_grad(self, k)) {
          for (std::size_t i = 0; i < sizes[k]; ++i) gp[i] += self.grad[off + i];
        }
        off += sizes[k];
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> slice_cols(const Tensor<Real>& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") outside shape " + shape_str(a.shape()));
  }
  const std::size_t m = a.rows(), n = a.cols(), w = end - begin;
  auto node = make_node<Real>({m, w}, "slice_cols", {&a});
  for (std::size_t r = 0; r < m; ++r)
    std::copy_n(a.data().data() + r * n + begin, w, node->value.data() + r * w);
  if (node->requires_grad) {
    node->backward = [m, n, w, begin](Node<Real>& self) {
      if (Real* ga = parent_grad(self, 0)) {
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < w; ++c)
            ga[r * n + begin + c] += self.grad[r * w + c];
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> slice_rows(const Tensor<Real>& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") outside shape " + shape_str(a.shape()));
  }
  const std::size_t n = a.cols();
  auto node = make_node<Real>({end - begin, n}, "slice_rows", {&a});
  std::copy(a.data().begin() + begin * n, a.data().begin() + end * n,
            node->value.begin());
  if (node->requires_grad) {
    node->backward = [n, begin](Node<Real>& self) {
      if (Real* ga = parent_grad(self, 0)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          ga[begin * n + i] += self.grad[i];
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> gather_rows(const Tensor<Real>& a, std::span<const std::size_t> rows) {
  const std::size_t n = a.cols(), m = a.rows();
  for (std::size_t r : rows) {
    if (r >= m) {
      throw std::out_of_range("gather_rows: row " + std::to_string(r) +
                              " outside shape " + shape_str(a.shape()));
    }
  }
  auto node = make_node<Real>({rows.size(), n}, "gather_rows", {&a});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(a.data().data() + rows[i] * n, n, node->value.data() + i * n);
  if (node->requires_grad) {
    std::vector<std::size_t> kept(rows.begin(), rows.end());
    node->backward = [n, kept = std::move(kept)](Node<Real>& self) {
      if (Real* ga = parent_grad(self, 0)) {
        for (std::size_t i = 0; i < kept.size(); ++i)
          for (std::size_t c = 0; c < n; ++c)
            ga[kept[i] * n + c] += self.grad[i * n + c];
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> embedding(const Tensor<Real>& table, std::span<const int> ids) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (int id : ids) {
    if (id < 0) throw std::out_of_range("embedding: negative id");
    rows.push_back(static_cast<std::size_t>(id));
  }
  return gather_rows(table, std::span<const std::size_t>(rows));
}

template <typename Real>
Tensor<Real> reshape(const Tensor<Real>& a, Shape shape) {
  if (numel(shape) != a.size()) shape_mismatch("reshape", a.shape(), shape);
  auto node = make_node<Real>(std::move(shape), "reshape", {&a});
  std::copy(a.data().begin(), a.data().end(), node->value.begin());
  if (node->requires_grad) {
    node->backward = [](Node<Real>& self) {
      if (Real* ga = parent_grad(self, 0)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
      }
    };
  }
  return Tensor<Real>::from_node(std::move(node));
}

template <typename Real>
Tensor<Real> dropout(const Tensor<Real>& a, double p, bool training,
                     std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw std::invalid_argument("dropout: p must lie in [0, 1), got " +
                                std::to_string(p));
  }
  if (!training || p == 0.0) return a;
  std::vector<Real> mask(a.size());
  const Real keep_scale = Real(1.0 / (1.0 - p));
  for (Real& m : mask) m = uniform01(rng) < p ? Real(0) : keep_scale;
  return mul(a, Tensor<Real>::from(a.shape(), std::move(mask)));
}

#define SYNDISTILL_INSTANTIATE(Real)                                           \
  template class Tensor<Real>;                                                 \
  template class Tape<Real>;                                                   \
  template Tensor<Real> matmul(const Tensor<Real>&, const Tensor<Real>&);      \
  template Tensor<Real> transpose(const Tensor<Real>&);                        \
  template Tensor<Real> add(const Tensor<Real>&, const Tensor<Real>&);         \
  template Tensor<Real> sub(const Tensor<Real>&, const Tensor<Real>&);         \
  template Tensor<Real> mul(const Tensor<Real>&, const Tensor<Real>&);         \
  template Tensor<Real> scale(const Tensor<Real>&, Real);                      \
  template Tensor<Real> add_scalar(const Tensor<Real>&, Real);                 \
  template Tensor<Real> sigmoid(const Tensor<Real>&);                          \
  template Tensor<Real> tanh(const Tensor<Real>&);                             \
  template Tensor<Real> relu(const Tensor<Real>&);                             \
  template Tensor<Real> exp(const Tensor<Real>&);                              \
  template Tensor<Real> log(const Tensor<Real>&);                              \
  template Tensor<Real> softmax(const Tensor<Real>&);                          \
  template Tensor<Real> log_softmax(const Tensor<Real>&);                      \
  template Tensor<Real> sum(const Tensor<Real>&);                              \
  template Tensor<Real> mean(const Tensor<Real>&);                             \
  template Tensor<Real> sum_rows(const Tensor<Real>&);                         \
  template Tensor<Real> pick_sum(const Tensor<Real>&,                          \
                                 std::span<const std::size_t>);                \
  template Tensor<Real> concat_cols(std::span<const Tensor<Real>>);            \
  template Tensor<Real> concat_rows(std::span<const Tensor<Real>>);            \
  template Tensor<Real> slice_cols(const Tensor<Real>&, std::size_t,           \
                                   std::size_t);                               \
  template Tensor<Real> slice_rows(const Tensor<Real>&, std::size_t,           \
                                   std::size_t);                               \
  template Tensor<Real> gather_rows(const Tensor<Real>&,                       \
                                    std::span<const std::size_t>);             \
  template Tensor<Real> embedding(const Tensor<Real>&, std::span<const int>);  \
  template Tensor<Real> reshape(const Tensor<Real>&, Shape);                   \
  template Tensor<Real> dropout(const Tensor<Real>&, double, bool,             \
                                std::mt19937_64&);

SYNDISTILL_INSTANTIATE(float)
SYNDISTILL_INSTANTIATE(double)

#undef SYNDISTILL_INSTANTIATE

}  // namespace syndistill
