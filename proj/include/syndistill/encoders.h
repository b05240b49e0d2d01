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

// Neural building blocks: tree-LSTM cells and encoders, gated GCNs, the
// stacked BiLSTM, task heads, and structure-scoring heads.
//
// Row-vector convention throughout: an input x is [1, in], weights are
// [in, out], and a layer computes x W + b.

#ifndef SYNDISTILL_ENCODERS_H_
#define SYNDISTILL_ENCODERS_H_

#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "syndistill/params.h"
#include "syndistill/structures.h"
#include "syndistill/syntax_data.h"
#include "syndistill/tensor.h"

namespace syndistill {

template <typename Real>
struct Linear {
  Tensor<Real> W;  // [in, out]
  Tensor<Real> b;  // [out]

  static Linear create(ParamStore<Real>& store, const std::string& name, std::size_t in,
                       std::size_t out, std::mt19937_64& rng);
  Tensor<Real> operator()(const Tensor<Real>& x) const { return add(matmul(x, W), b); }
  std::size_t in() const { return W.shape()[0]; }
  std::size_t out() const { return W.shape()[1]; }
};

// Linear -> tanh -> Linear.
template <typename Real>
struct Mlp {
  Linear<Real> hidden;
  Linear<Real> output;

  static Mlp create(ParamStore<Real>& store, const std::string& name, std::size_t in,
                    std::size_t width, std::size_t out, std::mt19937_64& rng);
  Tensor<Real> operator()(const Tensor<Real>& x) const { return output(tanh(hidden(x))); }
};

// ---- Tree-LSTM cells ------------------------------------------------------

template <typename Real>
struct CellState {
  Tensor<Real> h;  // [1, d]
  Tensor<Real> c;  // [1, d]
};

// Per-gate parameters of a tree-LSTM cell. For the Child-Sum cell every U is
// [d, d]. For the N-ary cell U_i, U_o, U_u are [N d, d], row block q being
// the branch matrix of child q, and U_f is [N d, N d] whose block (q, k)
// maps child q's state into child k's forget gate.
template <typename Real>
struct TreeCellParams {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::size_t arity = 0;  // 0 for Child-Sum
  Tensor<Real> W_i, W_f, W_o, W_u;
  Tensor<Real> U_i, U_f, U_o, U_u;
  Tensor<Real> b_i, b_f, b_o, b_u;

  static TreeCellParams create(ParamStore<Real>& store, const std::string& prefix,
                               std::size_t input, std::size_t hidden, std::size_t arity,
                               std::mt19937_64& rng);
  // Constant tensors filled with `value`, for hand-worked cases.
  static TreeCellParams constant(std::size_t input, std::size_t hidden, std::size_t arity,
                                 Real value);
};

// h_sum = sum_k h_k; i, o, u from (x, h_sum); one forget gate per child from
// (x, h_k); c = i*u + sum_k f_k*c_k; h = o*tanh(c).
template <typename Real>
CellState<Real> childsum_step(const Tensor<Real>& x, std::span<const CellState<Real>> children,
                              const TreeCellParams<Real>& p);

// Children fill slots 0..N-1 in order; missing slots hold zero states.
template <typename Real>
CellState<Real> nary_step(const Tensor<Real>& x, std::span<const CellState<Real>> children,
                          const TreeCellParams<Real>& p);

// ---- Tree encoders --------------------------------------------------------

// Rooted tree over encoder nodes. slot[i] is i's position among its
// parent's children.
struct Topology {
  std::vector<std::vector<int>> children;
  std::vector<int> parent;
  std::vector<int> slot;
  std::vector<int> postorder;
  int root = -1;

  // Throws std::invalid_argument unless `children` describes one tree.
  static Topology from_children(std::vector<std::vector<int>> children);
  std::size_t size() const { return children.size(); }
};

// Nodes are tokens 0..n-1.
Topology dep_topology(const DepTree& tree);
// Nodes follow the (normalized) span order of the tree; leaf_node[t] is the
// node of token t's leaf span.
Topology bin_topology(const BinTree& tree, std::vector<int>* leaf_node = nullptr);

enum class Direction { kBottomUp, kTopDown, kBoth };
enum class CellKind { kChildSum, kNary };

// Stacked tree-LSTM. The bottom-up pass feeds children into parents; the
// top-down pass feeds each node its parent's state as its only child (in the
// node's own slot for the N-ary cell). kBoth concatenates [up; down].
template <typename Real>
class TreeLstm {
 public:
  TreeLstm() = default;
  TreeLstm(ParamStore<Real>& store, const std::string& prefix, CellKind kind, std::size_t input,
           std::size_t hidden, std::size_t layers, Direction direction, std::mt19937_64& rng);
  // Builds from explicit cell parameters: one per layer, each [up, down].
  TreeLstm(CellKind kind, Direction direction,
           std::vector<std::vector<TreeCellParams<Real>>> cells);

  // x: [nodes, input] -> [nodes, output_dim()].
  Tensor<Real> encode(const Topology& topo, const Tensor<Real>& x) const;
  std::size_t output_dim() const;
  CellKind kind() const { return kind_; }

 private:
  Tensor<Real> pass(const Topology& topo, const Tensor<Real>& x, const TreeCellParams<Real>& p,
                    bool top_down) const;

  CellKind kind_ = CellKind::kChildSum;
  Direction direction_ = Direction::kBoth;
  std::vector<std::vector<TreeCellParams<Real>>> cells_;
};

// ---- Graph convolution ----------------------------------------------------

// Constant [m, m] adjacency with symmetric edges. Throws if a node ends up
// with no neighbour at all.
template <typename Real>
Tensor<Real> adjacency(std::size_t m, std::span<const std::pair<int, int>> edges,
                       bool self_loops);

// Head-dependent edges plus self-loops over n token nodes.
template <typename Real>
Tensor<Real> dep_adjacency(const DepTree& tree);

// Token nodes 0..n-1 followed by the tree's internal nodes; parent-child
// edges plus self-loops. labels[k] is the label of node n + k.
struct ConGraph {
  std::size_t tokens = 0;
  std::vector<std::string> labels;
  std::vector<std::pair<int, int>> edges;
};
ConGraph con_graph(const ConstTree& tree);

template <typename Real>
struct GcnLayerParams {
  Tensor<Real> W;  // [d, d]
  Tensor<Real> b;  // [d]
};

// g = sigmoid(H W + b); H' = relu(A (H * g)).
template <typename Real>
Tensor<Real> gcn_layer(const Tensor<Real>& A, const Tensor<Real>& H, const GcnLayerParams<Real>& p);

template <typename Real>
class Gcn {
 public:
  Gcn() = default;
  Gcn(ParamStore<Real>& store, const std::string& prefix, std::size_t dim, std::size_t layers,
      std::mt19937_64& rng);
  Tensor<Real> encode(const Tensor<Real>& A, const Tensor<Real>& H) const;
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_ = 0;
  std::vector<GcnLayerParams<Real>> layers_;
};

// ---- Sequential encoder ---------------------------------------------------

// Time-major packing of a batch: row t * batch + b holds example b at
// position t; rows past an example's length are padding.
struct BatchLayout {
  std::size_t batch = 0;
  std::size_t max_len = 0;
  std::vector<std::size_t> lengths;

  static BatchLayout of(std::vector<std::size_t> lengths);
  std::size_t row(std::size_t b, std::size_t t) const { return t * batch + b; }
  std::vector<std::size_t> rows(std::size_t b) const;
  std::size_t packed_rows() const { return batch * max_len; }
};

template <typename Real>
struct SequenceReps {
  Tensor<Real> packed;       // [max_len * batch, 2 hidden], top layer [fwd; bwd]
  Tensor<Real> top_forward;  // [max_len * batch, hidden]
  BatchLayout layout;
};

// LSTM weights with gates ordered i, f, o, g along the columns.
template <typename Real>
struct LstmParams {
  Tensor<Real> W;  // [in, 4h]
  Tensor<Real> U;  // [h, 4h]
  Tensor<Real> b;  // [4h]
};

template <typename Real>
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(ParamStore<Real>& store, const std::string& prefix, std::size_t input,
         std::size_t hidden, std::size_t layers, std::mt19937_64& rng);
  // Builds from explicit weights: per layer {forward, backward}.
  BiLstm(std::size_t hidden, std::vector<std::pair<LstmParams<Real>, LstmParams<Real>>> layers);

  // x: [max_len * batch, input] packed as in `layout`.
  SequenceReps<Real> encode(const Tensor<Real>& x, const BatchLayout& layout) const;
  std::size_t hidden() const { return hidden_; }
  std::size_t output_dim() const { return 2 * hidden_; }

 private:
  std::size_t hidden_ = 0;
  std::vector<std::pair<LstmParams<Real>, LstmParams<Real>>> layers_;
};

// ---- Heads ----------------------------------------------------------------

// [batch, d] means over each example's rows of `packed`.
template <typename Real>
Tensor<Real> mean_pool(const Tensor<Real>& packed, const BatchLayout& layout);
// Mean over all rows: [n, d] -> [1, d].
template <typename Real>
Tensor<Real> mean_rows(const Tensor<Real>& reps);

// [u; v; u*v; u-v; u+v].
template <typename Real>
Tensor<Real> pair_features(const Tensor<Real>& u, const Tensor<Real>& v);

// Per-token tags from [rep; indicator embedding] where the indicator marks
// the predicate.
template <typename Real>
struct TagHead {
  Tensor<Real> indicator;  // [2, k]
  Linear<Real> output;

  static TagHead create(ParamStore<Real>& store, const std::string& name, std::size_t in,
                        std::size_t indicator_dim, std::size_t tags, std::mt19937_64& rng);
  Tensor<Real> operator()(const Tensor<Real>& reps, int predicate) const;
};

template <typename Real>
struct ArcScores {
  Tensor<Real> arcs;        // [n, n + 1]; column 0 is the virtual root
  Tensor<Real> dep_label;   // [n, L] dependent-side label scores
  Tensor<Real> head_label;  // [n + 1, L] head-side label scores
  Tensor<Real> label_bias;  // [L]
};

// D = tanh(R W_d + b_d), H = tanh([root; R] W_h + b_h),
// arcs = D U H^T + (H w)^T, label(i, j) = D_l[i] + H_l[j] + b.
template <typename Real>
struct ArcScorer {
  Linear<Real> dep;
  Linear<Real> head;
  Tensor<Real> root;  // [1, d]
  Tensor<Real> U;     // [a, a]
  Tensor<Real> w;     // [a, 1]
  Tensor<Real> label_dep;   // [a, L]
  Tensor<Real> label_head;  // [a, L]
  Tensor<Real> label_bias;  // [L]

  static ArcScorer create(ParamStore<Real>& store, const std::string& name, std::size_t in,
                          std::size_t arc_dim, std::size_t labels, std::mt19937_64& rng);
  ArcScores<Real> operator()(const Tensor<Real>& reps) const;
  std::size_t labels() const { return label_bias.size(); }
};

// Label logits for every (dependent i, head j) pair; row i * (n + 1) + j.
template <typename Real>
Tensor<Real> all_label_logits(const ArcScores<Real>& s);
// Label logits for the given head of each dependent (heads[i] in 0..n).
template <typename Real>
Tensor<Real> label_logits(const ArcScores<Real>& s, std::span<const int> heads);

// Span (i, j) is represented by [r_last - r_first; r_first; r_last] with
// r_first = r_i and r_last = r_{j-1}, scored by Linear -> tanh -> Linear.
template <typename Real>
struct SpanScorer {
  Mlp<Real> mlp;

  static SpanScorer create(ParamStore<Real>& store, const std::string& name, std::size_t in,
                           std::size_t width, std::size_t labels, std::mt19937_64& rng);
  // [span_count(n), labels], rows in span_index order.
  Tensor<Real> operator()(const Tensor<Real>& reps) const;
  std::size_t labels() const { return mlp.output.out(); }
};

template <typename Real>
Tensor<Real> span_features(const Tensor<Real>& reps);

template <typename Real>
SpanScores to_span_scores(const Tensor<Real>& table, int n);

}  // namespace syndistill

#endif  // SYNDISTILL_ENCODERS_H_
