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

#include "syndistill/encoders.h"

#include <algorithm>
#include <stdexcept>

namespace syndistill {

namespace {

template <typename Real>
Tensor<Real> matrix(ParamStore<Real>& store, const std::string& name, std::size_t in,
                    std::size_t out, std::mt19937_64& rng) {
  return store.create(name, {in, out}, ParamStore<Real>::glorot(in, out), rng);
}

template <typename Real>
Tensor<Real> cat_cols(std::initializer_list<Tensor<Real>> parts) {
  return concat_cols<Real>(std::span<const Tensor<Real>>(parts.begin(), parts.size()));
}

template <typename Real>
Tensor<Real> cat_rows(const std::vector<Tensor<Real>>& parts) {
  return concat_rows<Real>(std::span<const Tensor<Real>>(parts));
}

template <typename Real>
Tensor<Real> row_of(const Tensor<Real>& a, std::size_t r) {
  const std::size_t idx[] = {r};
  return gather_rows<Real>(a, idx);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

template <typename Real>
Linear<Real> Linear<Real>::create(ParamStore<Real>& store, const std::string& name,
                                  std::size_t in, std::size_t out, std::mt19937_64& rng) {
  return {matrix(store, name + ".W", in, out, rng), store.create(name + ".b", {out}, 0.0, rng)};
}

template <typename Real>
Mlp<Real> Mlp<Real>::create(ParamStore<Real>& store, const std::string& name, std::size_t in,
                            std::size_t width, std::size_t out, std::mt19937_64& rng) {
  return {Linear<Real>::create(store, name + ".hidden", in, width, rng),
          Linear<Real>::create(store, name + ".out", width, out, rng)};
}

// ---- Cells ----------------------------------------------------------------

template <typename Real>
TreeCellParams<Real> TreeCellParams<Real>::create(ParamStore<Real>& store,
                                                  const std::string& prefix, std::size_t input,
                                                  std::size_t hidden, std::size_t arity,
                                                  std::mt19937_64& rng) {
  TreeCellParams p;
  p.input = input;
  p.hidden = hidden;
  p.arity = arity;
  const std::size_t span = std::max<std::size_t>(arity, 1) * hidden;
  p.W_i = matrix(store, prefix + ".W_i", input, hidden, rng);
  p.W_f = matrix(store, prefix + ".W_f", input, hidden, rng);
  p.W_o = matrix(store, prefix + ".W_o", input, hidden, rng);
  p.W_u = matrix(store, prefix + ".W_u", input, hidden, rng);
  p.U_i = matrix(store, prefix + ".U_i", span, hidden, rng);
  p.U_f = matrix(store, prefix + ".U_f", span, span, rng);
  p.U_o = matrix(store, prefix + ".U_o", span, hidden, rng);
  p.U_u = matrix(store, prefix + ".U_u", span, hidden, rng);
  p.b_i = store.create(prefix + ".b_i", {hidden}, 0.0, rng);
  p.b_f = store.create(prefix + ".b_f", {hidden}, 0.0, rng);
  p.b_o = store.create(prefix + ".b_o", {hidden}, 0.0, rng);
  p.b_u = store.create(prefix + ".b_u", {hidden}, 0.0, rng);
  return p;
}

template <typename Real>
TreeCellParams<Real> TreeCellParams<Real>::constant(std::size_t input, std::size_t hidden,
                                                    std::size_t arity, Real value) {
  TreeCellParams p;
  p.input = input;
  p.hidden = hidden;
  p.arity = arity;
  const std::size_t span = std::max<std::size_t>(arity, 1) * hidden;
  for (auto* t : {&p.W_i, &p.W_f, &p.W_o, &p.W_u}) *t = Tensor<Real>::filled({input, hidden}, value);
  for (auto* t : {&p.U_i, &p.U_o, &p.U_u}) *t = Tensor<Real>::filled({span, hidden}, value);
  p.U_f = Tensor<Real>::filled({span, span}, value);
  for (auto* t : {&p.b_i, &p.b_f, &p.b_o, &p.b_u}) *t = Tensor<Real>::zeros({hidden});
  return p;
}

namespace {

// Gate inputs for a batch of nodes: [m, 4h] in order i, o, u, f.
template <typename Real>
Tensor<Real> project_inputs(const Tensor<Real>& x, const TreeCellParams<Real>& p) {
  return add(matmul(x, cat_cols({p.W_i, p.W_o, p.W_u, p.W_f})),
             cat_cols({p.b_i, p.b_o, p.b_u, p.b_f}));
}

template <typename Real>
CellState<Real> finish(const Tensor<Real>& pre_iou, const Tensor<Real>& forget_sum,
                       std::size_t h) {
  const Tensor<Real> io = sigmoid(slice_cols(pre_iou, 0, 2 * h));
  const Tensor<Real> u = tanh(slice_cols(pre_iou, 2 * h, 3 * h));
  Tensor<Real> c = mul(slice_cols(io, 0, h), u);
  if (forget_sum.defined()) c = add(c, forget_sum);
  return {mul(slice_cols(io, h, 2 * h), tanh(c)), c};
}

// xp: [1, 4h] projected input of one node.
template <typename Real>
CellState<Real> childsum_core(const Tensor<Real>& xp, std::span<const CellState<Real>> children,
                              const TreeCellParams<Real>& p, const Tensor<Real>& U_iou) {
  const std::size_t h = p.hidden;
  Tensor<Real> pre = slice_cols(xp, 0, 3 * h);
  if (children.empty()) return finish(pre, Tensor<Real>(), h);
  std::vector<Tensor<Real>> hs, cs;
  for (const auto& s : children) {
    hs.push_back(s.h);
    cs.push_back(s.c);
  }
  const Tensor<Real> H = cat_rows(hs);
  pre = add(pre, matmul(sum_rows(H), U_iou));
  const Tensor<Real> F = sigmoid(add(matmul(H, p.U_f), slice_cols(xp, 3 * h, 4 * h)));
  return finish(pre, sum_rows(mul(F, cat_rows(cs))), h);
}

template <typename Real>
CellState<Real> nary_core(const Tensor<Real>& xp, std::span<const CellState<Real>> children,
                          const TreeCellParams<Real>& p, const Tensor<Real>& U_iou) {
  const std::size_t h = p.hidden, N = p.arity;
  if (children.size() > N) {
    throw std::invalid_argument("nary_step: " + std::to_string(children.size()) +
                                " children for arity " + std::to_string(N));
  }
  Tensor<Real> pre = slice_cols(xp, 0, 3 * h);
  bool any = false;
  for (const auto& s : children) any = any || s.h.defined();
  if (!any) return finish(pre, Tensor<Real>(), h);
  const Tensor<Real> zero = Tensor<Real>::zeros({1, h});
  std::vector<Tensor<Real>> hs(N, zero), cs(N, zero);
  for (std::size_t k = 0; k < children.size(); ++k) {
    if (!children[k].h.defined()) continue;
    hs[k] = children[k].h;
    cs[k] = children[k].c;
  }
  const Tensor<Real> H = concat_cols<Real>(hs);  // [1, N h]
  pre = add(pre, matmul(H, U_iou));
  const Tensor<Real> xf = slice_cols(xp, 3 * h, 4 * h);
  const std::vector<Tensor<Real>> tiled(N, xf);
  const Tensor<Real> F = sigmoid(add(matmul(H, p.U_f), concat_cols<Real>(tiled)));
  const Tensor<Real> fc = reshape(mul(F, concat_cols<Real>(cs)), {N, h});
  return finish(pre, sum_rows(fc), h);
}

template <typename Real>
void check_cell_input(const char* op, const Tensor<Real>& x, const TreeCellParams<Real>& p,
                      std::span<const CellState<Real>> children) {
  require(x.rows() == 1 && x.cols() == p.input,
          std::string(op) + ": input " + shape_str(x.shape()) + " for a cell with input size " +
              std::to_string(p.input));
  for (const auto& s : children) {
    if (!s.h.defined()) continue;
    require(s.h.size() == p.hidden && s.c.size() == p.hidden,
            std::string(op) + ": child state " + shape_str(s.h.shape()) +
                " for hidden size " + std::to_string(p.hidden));
  }
}

}  // namespace

template <typename Real>
CellState<Real> childsum_step(const Tensor<Real>& x, std::span<const CellState<Real>> children,
                              const TreeCellParams<Real>& p) {
  check_cell_input("childsum_step", x, p, children);
  return childsum_core(project_inputs(x, p), children, p, cat_cols({p.U_i, p.U_o, p.U_u}));
}

template <typename Real>
CellState<Real> nary_step(const Tensor<Real>& x, std::span<const CellState<Real>> children,
                          const TreeCellParams<Real>& p) {
  check_cell_input("nary_step", x, p, children);
  return nary_core(project_inputs(x, p), children, p, cat_cols({p.U_i, p.U_o, p.U_u}));
}

// ---- Topologies -----------------------------------------------------------

Topology Topology::from_children(std::vector<std::vector<int>> children) {
  const int m = static_cast<int>(children.size());
  if (m == 0) throw std::invalid_argument("topology: no nodes");
  Topology t;
  t.parent.assign(m, -1);
  t.slot.assign(m, 0);
  for (int i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < children[i].size(); ++k) {
      const int c = children[i][k];
      if (c < 0 || c >= m || c == i) throw std::invalid_argument("topology: bad child index");
      if (t.parent[c] >= 0) throw std::invalid_argument("topology: node with two parents");
      t.parent[c] = i;
      t.slot[c] = static_cast<int>(k);
    }
  }
  for (int i = 0; i < m; ++i) {
    if (t.parent[i] >= 0) continue;
    if (t.root >= 0) throw std::invalid_argument("topology: more than one root");
    t.root = i;
  }
  if (t.root < 0) throw std::invalid_argument("topology: cycle, no root");
  t.children = std::move(children);
  // Iterative postorder; nodes unreachable from the root lie on a cycle.
  std::vector<std::pair<int, std::size_t>> stack = {{t.root, 0}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < t.children[node].size()) {
      const int c = t.children[node][next++];
      stack.emplace_back(c, 0);
    } else {
      t.postorder.push_back(node);
      stack.pop_back();
    }
  }
  if (static_cast<int>(t.postorder.size()) != m) throw std::invalid_argument("topology: cycle");
  return t;
}

Topology dep_topology(const DepTree& tree) {
  if (auto err = dep_tree_error(tree.heads)) throw std::invalid_argument("dep_topology: " + *err);
  const int n = static_cast<int>(tree.size());
  std::vector<std::vector<int>> children(n);
  for (int i = 0; i < n; ++i) {
    if (tree.heads[i] > 0) children[tree.heads[i] - 1].push_back(i);
  }
  return Topology::from_children(std::move(children));
}

Topology bin_topology(const BinTree& tree, std::vector<int>* leaf_node) {
  if (auto err = tree.error()) throw std::invalid_argument("bin_topology: " + *err);
  BinTree sorted = tree;
  sorted.normalize();
  const auto& spans = sorted.spans;
  std::vector<std::vector<int>> children(spans.size());
  if (leaf_node) leaf_node->assign(tree.n, -1);
  // Preorder: a span's parent is the nearest enclosing span on the stack.
  std::vector<int> stack;
  for (int k = 0; k < static_cast<int>(spans.size()); ++k) {
    while (!stack.empty() && spans[stack.back()].end <= spans[k].begin) stack.pop_back();
    if (!stack.empty()) children[stack.back()].push_back(k);
    if (spans[k].end - spans[k].begin == 1) {
      if (leaf_node) (*leaf_node)[spans[k].begin] = k;
    } else {
      stack.push_back(k);
    }
  }
  return Topology::from_children(std::move(children));
}

// ---- TreeLstm -------------------------------------------------------------

template <typename Real>
TreeLstm<Real>::TreeLstm(ParamStore<Real>& store, const std::string& prefix, CellKind kind,
                         std::size_t input, std::size_t hidden, std::size_t layers,
                         Direction direction, std::mt19937_64& rng)
    : kind_(kind), direction_(direction) {
  const std::size_t arity = kind == CellKind::kNary ? 2 : 0;
  std::size_t in = input;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string base = prefix + ".l" + std::to_string(l);
    std::vector<TreeCellParams<Real>> layer;
    if (direction != Direction::kTopDown)
      layer.push_back(TreeCellParams<Real>::create(store, base + ".up", in, hidden, arity, rng));
    if (direction != Direction::kBottomUp)
      layer.push_back(TreeCellParams<Real>::create(store, base + ".down", in, hidden, arity, rng));
    cells_.push_back(std::move(layer));
    in = output_dim();
  }
}

template <typename Real>
TreeLstm<Real>::TreeLstm(CellKind kind, Direction direction,
                         std::vector<std::vector<TreeCellParams<Real>>> cells)
    : kind_(kind), direction_(direction), cells_(std::move(cells)) {
  const std::size_t per_layer = direction == Direction::kBoth ? 2 : 1;
  for (const auto& layer : cells_) {
    if (layer.size() != per_layer) throw std::invalid_argument("TreeLstm: wrong cells per layer");
  }
}

template <typename Real>
std::size_t TreeLstm<Real>::output_dim() const {
  const std::size_t h = cells_.empty() ? 0 : cells_[0][0].hidden;
  return direction_ == Direction::kBoth ? 2 * h : h;
}

template <typename Real>
Tensor<Real> TreeLstm<Real>::pass(const Topology& topo, const Tensor<Real>& x,
                                  const TreeCellParams<Real>& p, bool top_down) const {
  const Tensor<Real> xp = project_inputs(x, p);
  const Tensor<Real> U_iou = cat_cols({p.U_i, p.U_o, p.U_u});
  std::vector<CellState<Real>> state(topo.size());
  auto step = [&](int node, std::span<const CellState<Real>> kids) {
    const Tensor<Real> row = row_of(xp, node);
    state[node] = kind_ == CellKind::kChildSum ? childsum_core(row, kids, p, U_iou)
                                               : nary_core(row, kids, p, U_iou);
  };
  if (!top_down) {
    for (int node : topo.postorder) {
      std::vector<int> order = topo.children[node];
      // Fixed summation order for Child-Sum.
      if (kind_ == CellKind::kChildSum) std::sort(order.begin(), order.end());
      std::vector<CellState<Real>> kids;
      for (int c : order) kids.push_back(state[c]);
      step(node, kids);
    }
  } else {
    for (auto it = topo.postorder.rbegin(); it != topo.postorder.rend(); ++it) {
      const int node = *it;
      const int par = topo.parent[node];
      std::vector<CellState<Real>> kids;
      if (par >= 0) {
        if (kind_ == CellKind::kNary) {
          kids.resize(std::min<std::size_t>(topo.slot[node], p.arity - 1) + 1);
          kids.back() = state[par];
        } else {
          kids.push_back(state[par]);
        }
      }
      step(node, kids);
    }
  }
  std::vector<Tensor<Real>> hs;
  hs.reserve(state.size());
  for (const auto& s : state) hs.push_back(s.h);
  return cat_rows(hs);
}

template <typename Real>
Tensor<Real> TreeLstm<Real>::encode(const Topology& topo, const Tensor<Real>& x) const {
  require(x.rows() == topo.size(),
          "TreeLstm: " + std::to_string(x.rows()) + " input rows for " +
              std::to_string(topo.size()) + " nodes");
  if (kind_ == CellKind::kNary) {
    for (const auto& kids : topo.children) {
      if (kids.size() > 2) throw std::invalid_argument("TreeLstm: N-ary node with >2 children");
    }
  }
  Tensor<Real> h = x;
  for (const auto& layer : cells_) {
    switch (direction_) {
      case Direction::kBottomUp: h = pass(topo, h, layer[0], false); break;
      case Direction::kTopDown: h = pass(topo, h, layer[0], true); break;
      case Direction::kBoth:
        h = cat_cols({pass(topo, h, layer[0], false), pass(topo, h, layer[1], true)});
        break;
    }
  }
  return h;
}

// ---- GCN ------------------------------------------------------------------

template <typename Real>
Tensor<Real> adjacency(std::size_t m, std::span<const std::pair<int, int>> edges,
                       bool self_loops) {
  std::vector<Real> a(m * m, Real(0));
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= m || static_cast<std::size_t>(v) >= m)
      throw std::invalid_argument("adjacency: edge endpoint out of range");
    a[u * m + v] = a[v * m + u] = Real(1);
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (self_loops) a[i * m + i] = Real(1);
    if (std::all_of(a.begin() + i * m, a.begin() + (i + 1) * m, [](Real x) { return x == 0; }))
      throw std::invalid_argument("adjacency: node " + std::to_string(i) +
                                  " has no neighbours and no self-loop");
  }
  return Tensor<Real>::from({m, m}, std::move(a));
}

template <typename Real>
Tensor<Real> dep_adjacency(const DepTree& tree) {
  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (tree.heads[i] > 0) edges.emplace_back(static_cast<int>(i), tree.heads[i] - 1);
  }
  return adjacency<Real>(tree.size(), edges, true);
}

ConGraph con_graph(const ConstTree& tree) {
  ConGraph g;
  g.tokens = tree.size();
  std::vector<int> id(tree.nodes().size(), -1);
  for (std::size_t k = 0; k < tree.nodes().size(); ++k) {
    const ConstNode& node = tree.node(static_cast<int>(k));
    if (node.is_word()) {
      id[k] = node.token;
    } else {
      id[k] = static_cast<int>(g.tokens + g.labels.size());
      g.labels.push_back(node.label);
    }
  }
  for (std::size_t k = 0; k < tree.nodes().size(); ++k) {
    for (int c : tree.node(static_cast<int>(k)).children) g.edges.emplace_back(id[k], id[c]);
  }
  return g;
}

template <typename Real>
Tensor<Real> gcn_layer(const Tensor<Real>& A, const Tensor<Real>& H, const GcnLayerParams<Real>& p) {
  require(A.rank() == 2 && A.shape()[0] == H.rows() && A.shape()[1] == H.rows(),
          "gcn_layer: adjacency " + shape_str(A.shape()) + " for " + std::to_string(H.rows()) +
              " nodes");
  const Tensor<Real> gate = sigmoid(add(matmul(H, p.W), p.b));
  return relu(matmul(A, mul(H, gate)));
}

template <typename Real>
Gcn<Real>::Gcn(ParamStore<Real>& store, const std::string& prefix, std::size_t dim,
               std::size_t layers, std::mt19937_64& rng)
    : dim_(dim) {
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string base = prefix + ".l" + std::to_string(l);
    layers_.push_back({matrix(store, base + ".W", dim, dim, rng),
                       store.create(base + ".b", {dim}, 0.0, rng)});
  }
}

template <typename Real>
Tensor<Real> Gcn<Real>::encode(const Tensor<Real>& A, const Tensor<Real>& H) const {
  Tensor<Real> h = H;
  for (const auto& layer : layers_) h = gcn_layer(A, h, layer);
  return h;
}

// ---- BiLSTM ---------------------------------------------------------------

BatchLayout BatchLayout::of(std::vector<std::size_t> lengths) {
  BatchLayout l;
  l.batch = lengths.size();
  for (std::size_t n : lengths) {
    if (n == 0) throw std::invalid_argument("batch: empty sentence");
    l.max_len = std::max(l.max_len, n);
  }
  l.lengths = std::move(lengths);
  return l;
}

std::vector<std::size_t> BatchLayout::rows(std::size_t b) const {
  std::vector<std::size_t> out(lengths.at(b));
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = row(b, t);
  return out;
}

template <typename Real>
BiLstm<Real>::BiLstm(ParamStore<Real>& store, const std::string& prefix, std::size_t input,
                     std::size_t hidden, std::size_t layers, std::mt19937_64& rng)
    : hidden_(hidden) {
  std::size_t in = input;
  for (std::size_t l = 0; l < layers; ++l) {
    auto make = [&](const std::string& dir) {
      const std::string base = prefix + ".l" + std::to_string(l) + "." + dir;
      return LstmParams<Real>{matrix(store, base + ".W", in, 4 * hidden, rng),
                              matrix(store, base + ".U", hidden, 4 * hidden, rng),
                              store.create(base + ".b", {4 * hidden}, 0.0, rng)};
    };
    auto fwd = make("fwd");
    auto bwd = make("bwd");
    layers_.emplace_back(std::move(fwd), std::move(bwd));
    in = 2 * hidden;
  }
}

template <typename Real>
BiLstm<Real>::BiLstm(std::size_t hidden,
                     std::vector<std::pair<LstmParams<Real>, LstmParams<Real>>> layers)
    : hidden_(hidden), layers_(std::move(layers)) {}

template <typename Real>
SequenceReps<Real> BiLstm<Real>::encode(const Tensor<Real>& x, const BatchLayout& layout) const {
  const std::size_t B = layout.batch, L = layout.max_len, h = hidden_;
  require(x.rows() == layout.packed_rows(),
          "BiLstm: " + std::to_string(x.rows()) + " input rows for a batch of " +
              std::to_string(B) + " x " + std::to_string(L));
  // masks[t]: 1 for examples that have position t.
  std::vector<Tensor<Real>> masks(L);
  bool ragged = false;
  for (std::size_t t = 0; t < L; ++t) {
    std::vector<Real> m(B * h);
    for (std::size_t b = 0; b < B; ++b) {
      const Real on = t < layout.lengths[b] ? Real(1) : Real(0);
      ragged = ragged || on == Real(0);
      std::fill_n(m.begin() + b * h, h, on);
    }
    masks[t] = Tensor<Real>::from({B, h}, std::move(m));
  }

  auto run = [&](const Tensor<Real>& xp, const LstmParams<Real>& p, bool reverse) {
    std::vector<Tensor<Real>> out(L);
    Tensor<Real> hs = Tensor<Real>::zeros({B, h});
    Tensor<Real> cs = Tensor<Real>::zeros({B, h});
    bool first = true;
    for (std::size_t k = 0; k < L; ++k) {
      const std::size_t t = reverse ? L - 1 - k : k;
      Tensor<Real> pre = slice_rows(xp, t * B, (t + 1) * B);
      if (!first) pre = add(pre, matmul(hs, p.U));
      const Tensor<Real> ifo = sigmoid(slice_cols(pre, 0, 3 * h));
      const Tensor<Real> g = tanh(slice_cols(pre, 3 * h, 4 * h));
      Tensor<Real> c = mul(slice_cols(ifo, 0, h), g);
      if (!first) c = add(c, mul(slice_cols(ifo, h, 2 * h), cs));
      Tensor<Real> hn = mul(slice_cols(ifo, 2 * h, 3 * h), tanh(c));
      // Backward runs start inside the padding; keep their state at zero.
      if (reverse && ragged) {
        c = mul(c, masks[t]);
        hn = mul(hn, masks[t]);
      }
      hs = hn;
      cs = c;
      out[t] = hn;
      first = false;
    }
    return cat_rows(out);
  };

  SequenceReps<Real> reps;
  reps.layout = layout;
  Tensor<Real> input = x;
  for (const auto& [fwd, bwd] : layers_) {
    const Tensor<Real> f = run(add(matmul(input, fwd.W), fwd.b), fwd, false);
    const Tensor<Real> b = run(add(matmul(input, bwd.W), bwd.b), bwd, true);
    reps.top_forward = f;
    input = cat_cols({f, b});
  }
  reps.packed = input;
  return reps;
}

// ---- Heads ----------------------------------------------------------------

template <typename Real>
Tensor<Real> mean_pool(const Tensor<Real>& packed, const BatchLayout& layout) {
  require(packed.rows() == layout.packed_rows(), "mean_pool: packed rows do not match layout");
  const std::size_t R = layout.packed_rows();
  std::vector<Real> p(layout.batch * R, Real(0));
  for (std::size_t b = 0; b < layout.batch; ++b) {
    const Real w = Real(1) / static_cast<Real>(layout.lengths[b]);
    for (std::size_t t = 0; t < layout.lengths[b]; ++t) p[b * R + layout.row(b, t)] = w;
  }
  return matmul(Tensor<Real>::from({layout.batch, R}, std::move(p)), packed);
}

template <typename Real>
Tensor<Real> mean_rows(const Tensor<Real>& reps) {
  return scale(sum_rows(reps), Real(1) / static_cast<Real>(reps.rows()));
}

template <typename Real>
Tensor<Real> pair_features(const Tensor<Real>& u, const Tensor<Real>& v) {
  require(u.shape() == v.shape(),
          "pair_features: " + shape_str(u.shape()) + " vs " + shape_str(v.shape()));
  return cat_cols({u, v, mul(u, v), sub(u, v), add(u, v)});
}

template <typename Real>
TagHead<Real> TagHead<Real>::create(ParamStore<Real>& store, const std::string& name,
                                    std::size_t in, std::size_t indicator_dim, std::size_t tags,
                                    std::mt19937_64& rng) {
  return {store.create(name + ".indicator", {2, indicator_dim}, 0.1, rng),
          Linear<Real>::create(store, name + ".out", in + indicator_dim, tags, rng)};
}

template <typename Real>
Tensor<Real> TagHead<Real>::operator()(const Tensor<Real>& reps, int predicate) const {
  const int n = static_cast<int>(reps.rows());
  if (predicate < 0 || predicate >= n) throw std::invalid_argument("tag head: bad predicate");
  std::vector<int> flags(n, 0);
  flags[predicate] = 1;
  return output(cat_cols({reps, embedding<Real>(indicator, flags)}));
}

template <typename Real>
ArcScorer<Real> ArcScorer<Real>::create(ParamStore<Real>& store, const std::string& name,
                                        std::size_t in, std::size_t arc_dim, std::size_t labels,
                                        std::mt19937_64& rng) {
  ArcScorer s;
  s.dep = Linear<Real>::create(store, name + ".dep", in, arc_dim, rng);
  s.head = Linear<Real>::create(store, name + ".head", in, arc_dim, rng);
  s.root = store.create(name + ".root", {1, in}, 0.1, rng);
  s.U = matrix(store, name + ".U", arc_dim, arc_dim, rng);
  s.w = matrix(store, name + ".w", arc_dim, 1, rng);
  s.label_dep = matrix(store, name + ".label_dep", arc_dim, labels, rng);
  s.label_head = matrix(store, name + ".label_head", arc_dim, labels, rng);
  s.label_bias = store.create(name + ".label_b", {labels}, 0.0, rng);
  return s;
}

template <typename Real>
ArcScores<Real> ArcScorer<Real>::operator()(const Tensor<Real>& reps) const {
  require(reps.cols() == dep.in(), "arc scorer: reps " + shape_str(reps.shape()) +
                                       " for input size " + std::to_string(dep.in()));
  const Tensor<Real> D = tanh(dep(reps));
  const Tensor<Real> H = tanh(head(cat_rows<Real>({root, reps})));
  ArcScores<Real> s;
  s.arcs = add(matmul(matmul(D, U), transpose(H)), transpose(matmul(H, w)));
  s.dep_label = matmul(D, label_dep);
  s.head_label = matmul(H, label_head);
  s.label_bias = label_bias;
  return s;
}

template <typename Real>
Tensor<Real> all_label_logits(const ArcScores<Real>& s) {
  const std::size_t n = s.dep_label.rows();
  std::vector<std::size_t> di, hj;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      di.push_back(i);
      hj.push_back(j);
    }
  }
  return add(add(gather_rows<Real>(s.dep_label, di), gather_rows<Real>(s.head_label, hj)),
             s.label_bias);
}

template <typename Real>
Tensor<Real> label_logits(const ArcScores<Real>& s, std::span<const int> heads) {
  const std::size_t n = s.dep_label.rows();
  require(heads.size() == n, "label_logits: " + std::to_string(heads.size()) + " heads for " +
                                 std::to_string(n) + " tokens");
  std::vector<std::size_t> hj(heads.begin(), heads.end());
  for (std::size_t j : hj) require(j <= n, "label_logits: head index out of range");
  return add(add(s.dep_label, gather_rows<Real>(s.head_label, hj)), s.label_bias);
}

template <typename Real>
SpanScorer<Real> SpanScorer<Real>::create(ParamStore<Real>& store, const std::string& name,
                                          std::size_t in, std::size_t width, std::size_t labels,
                                          std::mt19937_64& rng) {
  return {Mlp<Real>::create(store, name, 3 * in, width, labels, rng)};
}

template <typename Real>
Tensor<Real> span_features(const Tensor<Real>& reps) {
  const int n = static_cast<int>(reps.rows());
  std::vector<std::size_t> first, last;
  for (auto [i, j] : enumerate_spans(n)) {
    first.push_back(i);
    last.push_back(j - 1);
  }
  const Tensor<Real> a = gather_rows<Real>(reps, first);
  const Tensor<Real> b = gather_rows<Real>(reps, last);
  return cat_cols({sub(b, a), a, b});
}

template <typename Real>
Tensor<Real> SpanScorer<Real>::operator()(const Tensor<Real>& reps) const {
  require(3 * reps.cols() == mlp.hidden.in(),
          "span scorer: reps " + shape_str(reps.shape()) + " for input size " +
              std::to_string(mlp.hidden.in() / 3));
  return mlp(span_features(reps));
}

template <typename Real>
SpanScores to_span_scores(const Tensor<Real>& table, int n) {
  require(table.rows() == span_count(n), "to_span_scores: table rows do not match n");
  SpanScores s(n, static_cast<int>(table.cols()));
  std::copy(table.data().begin(), table.data().end(), s.values.begin());
  return s;
}

#define SYNDISTILL_INSTANTIATE(Real)                                                          \
  template struct Linear<Real>;                                                               \
  template struct Mlp<Real>;                                                                  \
  template struct TreeCellParams<Real>;                                                       \
  template CellState<Real> childsum_step(const Tensor<Real>&,                                 \
                                         std::span<const CellState<Real>>,                    \
                                         const TreeCellParams<Real>&);                        \
  template CellState<Real> nary_step(const Tensor<Real>&, std::span<const CellState<Real>>,   \
                                     const TreeCellParams<Real>&);                            \
  template class TreeLstm<Real>;                                                              \
  template Tensor<Real> adjacency<Real>(std::size_t, std::span<const std::pair<int, int>>,    \
                                        bool);                                                \
  template Tensor<Real> dep_adjacency<Real>(const DepTree&);                                  \
  template Tensor<Real> gcn_layer(const Tensor<Real>&, const Tensor<Real>&,                   \
                                  const GcnLayerParams<Real>&);                               \
  template class Gcn<Real>;                                                                   \
  template class BiLstm<Real>;                                                                \
  template Tensor<Real> mean_pool(const Tensor<Real>&, const BatchLayout&);                   \
  template Tensor<Real> mean_rows(const Tensor<Real>&);                                       \
  template Tensor<Real> pair_features(const Tensor<Real>&, const Tensor<Real>&);              \
  template struct TagHead<Real>;                                                              \
  template struct ArcScorer<Real>;                                                            \
  template Tensor<Real> all_label_logits(const ArcScores<Real>&);                             \
  template Tensor<Real> label_logits(const ArcScores<Real>&, std::span<const int>);           \
  template struct SpanScorer<Real>;                                                           \
  template Tensor<Real> span_features(const Tensor<Real>&);                                   \
  template SpanScores to_span_scores(const Tensor<Real>&, int);

SYNDISTILL_INSTANTIATE(float)
SYNDISTILL_INSTANTIATE(double)

}  // namespace syndistill
