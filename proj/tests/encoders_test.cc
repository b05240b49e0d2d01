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

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "syndistill/encoders.h"
#include "syndistill/gradcheck.h"
#include "test_util.h"

namespace sd = syndistill;
using T = sd::Tensor<double>;
using State = sd::CellState<double>;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

T random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  return T::from({r, c}, random_values(rng, r * c, scale));
}

State random_state(std::mt19937_64& rng, std::size_t d) {
  return {random_matrix(rng, 1, d), random_matrix(rng, 1, d)};
}

sd::TreeCellParams<double> random_cell(std::mt19937_64& rng, std::size_t in, std::size_t d,
                                       std::size_t arity) {
  auto p = sd::TreeCellParams<double>::constant(in, d, arity, 0.0);
  const std::size_t span = std::max<std::size_t>(arity, 1) * d;
  for (auto* t : {&p.W_i, &p.W_f, &p.W_o, &p.W_u}) *t = random_matrix(rng, in, d);
  for (auto* t : {&p.U_i, &p.U_o, &p.U_u}) *t = random_matrix(rng, span, d);
  p.U_f = random_matrix(rng, span, span);
  for (auto* t : {&p.b_i, &p.b_f, &p.b_o, &p.b_u}) *t = T::from({d}, random_values(rng, d));
  return p;
}

double max_abs_diff(const T& a, const T& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.at(i) - b.at(i)));
  return m;
}

bool bit_equal(const T& a, const T& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

// Independent scalar-loop evaluation of a single-child tree-LSTM step
// (an ordinary LSTM step), row-vector convention.
std::vector<double> lstm_step_oracle(const sd::TreeCellParams<double>& p,
                                     const std::vector<double>& x, std::vector<double>& h,
                                     std::vector<double>& c) {
  const std::size_t in = p.input, d = p.hidden;
  auto affine = [&](const T& W, const T& U, const T& b, const std::vector<double>& hv,
                    std::size_t k) {
    double s = b.at(k);
    for (std::size_t r = 0; r < in; ++r) s += x[r] * W.at(r, k);
    for (std::size_t r = 0; r < d; ++r) s += hv[r] * U.at(r, k);
    return s;
  };
  std::vector<double> hn(d), cn(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double i = sig(affine(p.W_i, p.U_i, p.b_i, h, k));
    const double f = sig(affine(p.W_f, p.U_f, p.b_f, h, k));
    const double o = sig(affine(p.W_o, p.U_o, p.b_o, h, k));
    const double u = std::tanh(affine(p.W_u, p.U_u, p.b_u, h, k));
    cn[k] = i * u + f * c[k];
    hn[k] = o * std::tanh(cn[k]);
  }
  h = hn;
  c = cn;
  return hn;
}

}  // namespace

TEST_CASE("child-sum: zero parameters on a leaf give zero state") {
  const auto p = sd::TreeCellParams<double>::constant(3, 4, 0, 0.0);
  const State s = sd::childsum_step<double>(T::filled({1, 3}, 0.7), {}, p);
  for (double v : s.h.data()) CHECK(v == 0.0);
  for (double v : s.c.data()) CHECK(v == 0.0);
}

TEST_CASE("child-sum: hand-worked scalar step") {
  const auto p = sd::TreeCellParams<double>::constant(1, 1, 0, 1.0);
  const State child{T::filled({1, 1}, 0.5), T::filled({1, 1}, 0.5)};
  const State s = sd::childsum_step<double>(T::filled({1, 1}, 1.0), {&child, 1}, p);
  // x + h = 1.5 feeds every gate.
  const double g = sig(1.5), u = std::tanh(1.5);
  const double c = g * u + g * 0.5;
  CHECK(s.c.item() == doctest::Approx(c).epsilon(1e-14));
  CHECK(s.h.item() == doctest::Approx(g * std::tanh(c)).epsilon(1e-14));
}

TEST_CASE("n-ary: zero parameters and hand-worked scalar step") {
  const auto zero = sd::TreeCellParams<double>::constant(2, 3, 2, 0.0);
  const State leaf = sd::nary_step<double>(T::filled({1, 2}, 0.3), {}, zero);
  for (double v : leaf.h.data()) CHECK(v == 0.0);

  const auto p = sd::TreeCellParams<double>::constant(1, 1, 2, 1.0);
  const State kids[] = {{T::filled({1, 1}, 0.5), T::filled({1, 1}, 0.5)},
                        {T::filled({1, 1}, -0.25), T::filled({1, 1}, 2.0)}};
  const State s = sd::nary_step<double>(T::filled({1, 1}, 1.0), kids, p);
  // Every gate sees x + h_1 + h_2 = 1.25 with unit weights.
  const double g = sig(1.25), u = std::tanh(1.25);
  const double c = g * u + g * 0.5 + g * 2.0;
  CHECK(s.h.item() == doctest::Approx(g * std::tanh(c)).epsilon(1e-14));
  CHECK_THROWS(sd::nary_step<double>(T::filled({1, 1}, 1.0),
                                     {std::vector<State>(3, kids[0]).data(), 3}, p));
}

TEST_CASE("n-ary: swapping children changes the output") {
  std::mt19937_64 rng(3);
  const auto p = random_cell(rng, 2, 3, 2);
  const T x = random_matrix(rng, 1, 2);
  const State a = random_state(rng, 3), b = random_state(rng, 3);
  const State ab[] = {a, b}, ba[] = {b, a};
  CHECK(max_abs_diff(sd::nary_step<double>(x, ab, p).h, sd::nary_step<double>(x, ba, p).h) > 1e-6);
}

TEST_CASE("child-sum: sibling order does not matter") {
  std::mt19937_64 rng(4);
  const auto p = random_cell(rng, 2, 3, 0);
  const T x = random_matrix(rng, 1, 2);
  const State a = random_state(rng, 3), b = random_state(rng, 3);
  const State ab[] = {a, b}, ba[] = {b, a};
  CHECK(bit_equal(sd::childsum_step<double>(x, ab, p).h, sd::childsum_step<double>(x, ba, p).h));
}

TEST_CASE("child-sum equals n-ary with N = 1 on one child") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_cell(rng, 3, 4, 0);
    auto q = p;
    q.arity = 1;
    const T x = random_matrix(rng, 1, 3);
    const State child = random_state(rng, 4);
    const State a = sd::childsum_step<double>(x, {&child, 1}, p);
    const State b = sd::nary_step<double>(x, {&child, 1}, q);
    CHECK(max_abs_diff(a.h, b.h) < 1e-12);
    CHECK(max_abs_diff(a.c, b.c) < 1e-12);
  }
}

TEST_CASE("topologies") {
  sd::DepTree dep{{2, 0, 2, 3}, {"a", "root", "b", "c"}};
  const auto t = sd::dep_topology(dep);
  CHECK(t.root == 1);
  CHECK(t.children[1] == std::vector<int>{0, 2});
  CHECK(t.postorder.back() == 1);
  CHECK_THROWS(sd::Topology::from_children({{1}, {0}}));
  CHECK_THROWS(sd::Topology::from_children({{1}, {}, {}}));

  sd::BinTree bt{3, {{0, 3, 1}, {0, 1, 0}, {1, 3, 0}, {1, 2, 2}, {2, 3, 0}}};
  std::vector<int> leaves;
  const auto b = sd::bin_topology(bt, &leaves);
  CHECK(b.root == 0);
  CHECK(b.children[0] == std::vector<int>{1, 2});
  CHECK(b.children[2] == std::vector<int>{3, 4});
  CHECK(leaves == std::vector<int>{1, 3, 4});
  CHECK(b.slot[4] == 1);
}

TEST_CASE("tree-lstm: chain tree equals a sequential pass") {
  std::mt19937_64 rng(6);
  const std::size_t n = 5, in = 3, d = 4;
  const auto p = random_cell(rng, in, d, 0);
  // Token t's only child is token t - 1.
  std::vector<std::vector<int>> kids(n);
  for (std::size_t t = 1; t < n; ++t) kids[t] = {static_cast<int>(t - 1)};
  const auto topo = sd::Topology::from_children(kids);
  const T x = random_matrix(rng, n, in);
  for (auto kind : {sd::CellKind::kChildSum, sd::CellKind::kNary}) {
    auto q = p;
    if (kind == sd::CellKind::kNary) q.arity = 1;
    const sd::TreeLstm<double> enc(kind, sd::Direction::kBottomUp, {{q}});
    const T out = enc.encode(topo, x);
    std::vector<double> h(d, 0.0), c(d, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      std::vector<double> xt(x.data().begin() + t * in, x.data().begin() + (t + 1) * in);
      const auto ht = lstm_step_oracle(q, xt, h, c);
      for (std::size_t k = 0; k < d; ++k) CHECK(out.at(t, k) == doctest::Approx(ht[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("tree-lstm: bidirectional width and permutation behaviour") {
  std::mt19937_64 rng(7);
  sd::ParamStore<double> store;
  const sd::TreeLstm<double> cs(store, "cs", sd::CellKind::kChildSum, 3, 4, 2,
                                sd::Direction::kBoth, rng);
  const sd::TreeLstm<double> up(store, "up", sd::CellKind::kChildSum, 3, 4, 1,
                                sd::Direction::kBottomUp, rng);
  CHECK(cs.output_dim() == 8);
  CHECK(up.output_dim() == 4);
  // Node 0 has children 1, 2, 3; node 2 has child 4.
  const auto topo = sd::Topology::from_children({{1, 2, 3}, {}, {4}, {}, {}});
  const auto perm = sd::Topology::from_children({{3, 1, 2}, {}, {4}, {}, {}});
  const T x = random_matrix(rng, 5, 3);
  const T a = cs.encode(topo, x);
  CHECK(a.shape() == sd::Shape{5, 8});
  CHECK(bit_equal(a, cs.encode(perm, x)));

  const sd::TreeLstm<double> nary(store, "nary", sd::CellKind::kNary, 3, 4, 1,
                                  sd::Direction::kBoth, rng);
  const auto bin = sd::Topology::from_children({{1, 2}, {}, {}});
  const auto swapped = sd::Topology::from_children({{2, 1}, {}, {}});
  const T xb = random_matrix(rng, 3, 3);
  CHECK(max_abs_diff(nary.encode(bin, xb), nary.encode(swapped, xb)) > 1e-6);
  CHECK_THROWS(nary.encode(topo, x));
}

TEST_CASE("tree-lstm: gates and outputs stay in range") {
  std::mt19937_64 rng(8);
  sd::ParamStore<double> store;
  const sd::TreeLstm<double> enc(store, "e", sd::CellKind::kChildSum, 4, 5, 2,
                                 sd::Direction::kBoth, rng);
  const auto topo = sd::Topology::from_children({{1, 2}, {3}, {}, {}});
  const T out = enc.encode(topo, random_matrix(rng, 4, 4, 5.0));
  for (double v : out.data()) {
    CHECK(std::isfinite(v));
    CHECK(std::abs(v) < 1.0);
  }
}

TEST_CASE("gcn: fixed cases") {
  const std::pair<int, int> edge[] = {{0, 1}};
  const T A = sd::adjacency<double>(3, edge, true);
  sd::GcnLayerParams<double> zero{T::zeros({2, 2}), T::zeros({2})};
  const T H = T::from({3, 2}, {1.0, -2.0, 3.0, 0.5, -1.0, -1.0});
  const T out = sd::gcn_layer(A, H, zero);
  // Node 0 sees nodes 0 and 1, node 2 only itself.
  CHECK(out.at(0, 0) == doctest::Approx(0.5 * (1.0 + 3.0)));
  CHECK(out.at(0, 1) == doctest::Approx(0.0));
  CHECK(out.at(1, 1) == doctest::Approx(0.0));
  CHECK(out.at(2, 0) == 0.0);

  sd::GcnLayerParams<double> p{T::from({2, 2}, {0.3, -0.2, 0.1, 0.4}), T::from({2}, {0.1, -0.1})};
  const T one = T::from({1, 2}, {0.8, -0.6});
  const T self = sd::gcn_layer(sd::adjacency<double>(1, {}, true), one, p);
  for (int k = 0; k < 2; ++k) {
    const double pre = one.at(0) * p.W.at(0, k) + one.at(1) * p.W.at(1, k) + p.b.at(k);
    CHECK(self.at(k) == doctest::Approx(std::max(0.0, one.at(k) * sig(pre))));
  }
  CHECK_THROWS(sd::adjacency<double>(3, edge, false));
}

TEST_CASE("gcn: graphs from trees") {
  sd::DepTree dep{{2, 0, 2}, {"a", "root", "b"}};
  const T A = sd::dep_adjacency<double>(dep);
  CHECK(A.at(0, 1) == 1.0);
  CHECK(A.at(1, 0) == 1.0);
  CHECK(A.at(0, 2) == 0.0);
  CHECK(A.at(2, 2) == 1.0);
  const auto con = sd::parse_bracketed("(S (NP a b) (VP c))")[0];
  const auto g = sd::con_graph(con);
  CHECK(g.tokens == 3);
  CHECK(g.labels.size() == 3);
  CHECK(g.edges.size() == 5);
}

TEST_CASE("gcn: gradient with respect to W matches finite differences") {
  std::mt19937_64 rng(9);
  const std::pair<int, int> edges[] = {{0, 1}, {1, 2}, {1, 3}};
  const T A = sd::adjacency<double>(4, edges, true);
  const T H = random_matrix(rng, 4, 5);
  sd::GcnLayerParams<double> p{T::from({5, 5}, random_values(rng, 25), true),
                               T::from({5}, random_values(rng, 5), true)};
  const T probe = random_matrix(rng, 4, 5);
  std::vector<T> inputs = {p.W, p.b};
  const auto r = sd::gradcheck<double>(
      [&] { return sd::sum(sd::mul(sd::gcn_layer(A, H, p), probe)); }, inputs, 1e-6);
  CHECK(r.max_rel_err < 1e-5);
}

TEST_CASE("bilstm: shapes and single-token sentence") {
  std::mt19937_64 rng(10);
  sd::ParamStore<float> store;
  const sd::BiLstm<float> big(store, "s", 300, 350, 3, rng);
  const auto layout = sd::BatchLayout::of({2});
  const auto reps = big.encode(sd::Tensor<float>::filled({2, 300}, 0.1f), layout);
  CHECK(reps.packed.shape() == sd::Shape{2, 700});

  sd::ParamStore<double> small;
  const sd::BiLstm<double> enc(small, "s", 3, 4, 1, rng);
  const T x = random_matrix(rng, 1, 3);
  const auto one = enc.encode(x, sd::BatchLayout::of({1}));
  CHECK(one.packed.shape() == sd::Shape{1, 8});
  CHECK(one.top_forward.shape() == sd::Shape{1, 4});
}

TEST_CASE("bilstm: reversal swaps halves under mirrored weights") {
  std::mt19937_64 rng(11);
  const std::size_t in = 3, h = 4;
  std::vector<std::pair<sd::LstmParams<double>, sd::LstmParams<double>>> layers;
  for (int l = 0; l < 3; ++l) {
    const std::size_t rows = l == 0 ? in : 2 * h;
    sd::LstmParams<double> fwd{random_matrix(rng, rows, 4 * h), random_matrix(rng, h, 4 * h),
                               T::from({4 * h}, random_values(rng, 4 * h))};
    sd::LstmParams<double> bwd = fwd;
    if (l > 0) {
      // Backward input rows are the forward rows with the halves exchanged.
      const T top = sd::slice_rows(fwd.W, 0, h), bottom = sd::slice_rows(fwd.W, h, 2 * h);
      const T parts[] = {bottom, top};
      bwd.W = sd::concat_rows<double>(parts);
    }
    layers.emplace_back(fwd, bwd);
  }
  const sd::BiLstm<double> enc(h, layers);
  const std::size_t n = 4, m = 6;
  const T x = random_matrix(rng, n, in);
  const T other = random_matrix(rng, m, in);
  // Batch: sentence, its reversal, and a longer example that forces padding.
  const auto layout = sd::BatchLayout::of({n, n, m});
  std::vector<double> packed(layout.packed_rows() * in, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < in; ++k) {
      packed[layout.row(0, t) * in + k] = x.at(t, k);
      packed[layout.row(1, t) * in + k] = x.at(n - 1 - t, k);
    }
  }
  for (std::size_t t = 0; t < m; ++t)
    for (std::size_t k = 0; k < in; ++k) packed[layout.row(2, t) * in + k] = other.at(t, k);
  const auto reps = enc.encode(T::from({layout.packed_rows(), in}, packed), layout);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < h; ++k) {
      const double f = reps.packed.at(layout.row(0, t), k);
      const double b = reps.packed.at(layout.row(0, t), h + k);
      CHECK(reps.packed.at(layout.row(1, n - 1 - t), h + k) == doctest::Approx(f).epsilon(1e-12));
      CHECK(reps.packed.at(layout.row(1, n - 1 - t), k) == doctest::Approx(b).epsilon(1e-12));
    }
  }
  // Padding does not leak: encoding the sentence alone gives the same rows.
  const auto alone = enc.encode(x, sd::BatchLayout::of({n}));
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t k = 0; k < 2 * h; ++k)
      CHECK(alone.packed.at(t, k) == doctest::Approx(reps.packed.at(layout.row(0, t), k)).epsilon(1e-12));
}

TEST_CASE("heads: pair features, pooling and tagging") {
  std::mt19937_64 rng(12);
  const T u = random_matrix(rng, 2, 3);
  const T f = sd::pair_features(u, u);
  CHECK(f.shape() == sd::Shape{2, 15});
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t k = 9; k < 12; ++k) CHECK(f.at(r, k) == 0.0);

  const auto layout = sd::BatchLayout::of({2, 1});
  const T packed = T::from({4, 1}, {1.0, 5.0, 3.0, 99.0});
  const T pooled = sd::mean_pool(packed, layout);
  CHECK(pooled.at(0) == doctest::Approx(2.0));
  CHECK(pooled.at(1) == doctest::Approx(5.0));

  sd::ParamStore<double> store;
  const auto tag = sd::TagHead<double>::create(store, "tag", 3, 2, 5, rng);
  CHECK(tag(random_matrix(rng, 4, 3), 1).shape() == sd::Shape{4, 5});
  CHECK_THROWS(tag(random_matrix(rng, 4, 3), 4));
}

TEST_CASE("arc scorer: distributions and hand-computed scores") {
  std::mt19937_64 rng(13);
  sd::ParamStore<double> store;
  auto arc = sd::ArcScorer<double>::create(store, "arc", 3, 2, 4, rng);
  const T reps = random_matrix(rng, 2, 3);
  const auto s = arc(reps);
  CHECK(s.arcs.shape() == sd::Shape{2, 3});
  const T probs = sd::softmax(s.arcs);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(probs.at(i, 0) + probs.at(i, 1) + probs.at(i, 2) == doctest::Approx(1.0).epsilon(1e-6));

  // Hand evaluation of D U H^T + (H w)^T for n = 2.
  auto row_tanh = [](const std::vector<double>& r, const sd::Linear<double>& lin) {
    std::vector<double> out(lin.out());
    for (std::size_t k = 0; k < out.size(); ++k) {
      double v = lin.b.at(k);
      for (std::size_t j = 0; j < r.size(); ++j) v += r[j] * lin.W.at(j, k);
      out[k] = std::tanh(v);
    }
    return out;
  };
  std::vector<std::vector<double>> rows = {{reps.at(0, 0), reps.at(0, 1), reps.at(0, 2)},
                                           {reps.at(1, 0), reps.at(1, 1), reps.at(1, 2)}};
  std::vector<double> root(arc.root.data().begin(), arc.root.data().end());
  std::vector<std::vector<double>> H = {row_tanh(root, arc.head), row_tanh(rows[0], arc.head),
                                        row_tanh(rows[1], arc.head)};
  for (std::size_t i = 0; i < 2; ++i) {
    const auto D = row_tanh(rows[i], arc.dep);
    std::vector<double> logits(3);
    for (std::size_t j = 0; j < 3; ++j) {
      double v = 0.0;
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t b = 0; b < 2; ++b) v += D[a] * arc.U.at(a, b) * H[j][b];
        v += H[j][a] * arc.w.at(a, 0);
      }
      logits[j] = v;
    }
    const double z = std::exp(logits[0]) + std::exp(logits[1]) + std::exp(logits[2]);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(probs.at(i, j) == doctest::Approx(std::exp(logits[j]) / z).epsilon(1e-6));
  }

  const T all = sd::all_label_logits(s);
  CHECK(all.shape() == sd::Shape{6, 4});
  const int heads[] = {2, 0};
  const T picked = sd::label_logits(s, heads);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(picked.at(0, k) == doctest::Approx(all.at(0 * 3 + 2, k)));
    CHECK(picked.at(1, k) == doctest::Approx(all.at(1 * 3 + 0, k)));
  }

  // Zero parameters: uniform over the n + 1 candidate heads.
  for (auto& [_, t] : store.entries()) {
    T handle = t;
    std::fill(handle.mutable_data().begin(), handle.mutable_data().end(), 0.0);
  }
  const T uniform = sd::softmax(arc(random_matrix(rng, 4, 3)).arcs);
  for (double v : uniform.data()) CHECK(v == doctest::Approx(0.2));
}

TEST_CASE("span scorer: table size, zero parameters, tie-break tree") {
  std::mt19937_64 rng(14);
  sd::ParamStore<double> store;
  auto span = sd::SpanScorer<double>::create(store, "span", 3, 4, 3, rng);
  const int n = 5;
  const T table = span(random_matrix(rng, n, 3));
  CHECK(table.size() == static_cast<std::size_t>(n * (n + 1) / 2 * 3));
  for (auto& [_, t] : store.entries()) {
    T handle = t;
    std::fill(handle.mutable_data().begin(), handle.mutable_data().end(), 0.0);
  }
  T bias = span.mlp.output.b;
  bias.mutable_data()[0] = 0.25;
  bias.mutable_data()[1] = 0.25;
  const auto scores = sd::to_span_scores(span(random_matrix(rng, n, 3)), n);
  for (int l = 0; l < 3; ++l) CHECK(scores.at(1, 3, l) == (l < 2 ? 0.25 : 0.0));
  // All spans tie: lowest split everywhere gives the right-branching tree.
  const auto best = sd::cyk_max(scores);
  sd::BinTree want{n, {}};
  for (int i = 0; i < n; ++i) {
    want.spans.push_back({i, n, 0});
    if (i < n - 1) want.spans.push_back({i, i + 1, 0});
  }
  want.normalize();
  CHECK(best.tree == want);
}

TEST_CASE("span scorer: gradient of one span score") {
  std::mt19937_64 rng(15);
  sd::ParamStore<double> store;
  auto span = sd::SpanScorer<double>::create(store, "span", 3, 4, 3, rng);
  const T reps = random_matrix(rng, 4, 3);
  auto params = store.tensors();
  const std::size_t pick[] = {sd::span_index(1, 3, 4) * 3 + 2};
  const auto r = sd::gradcheck<double>([&] { return sd::pick_sum(span(reps), pick); }, params, 1e-6);
  CHECK(r.max_rel_err < 1e-5);
}
