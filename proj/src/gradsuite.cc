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

#include "syndistill/gradsuite.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include "syndistill/distill.h"
#include "syndistill/encoders.h"
#include "syndistill/gradcheck.h"

namespace syndistill {
namespace {

using T = Tensor<double>;

int rand_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

T random_tensor(std::mt19937_64& rng, Shape shape, bool grad, double scale = 1.0) {
  std::vector<double> v(numel(shape));
  for (double& x : v) x = scale * (2.0 * uniform01(rng) - 1.0);
  return T::from(std::move(shape), std::move(v), grad);
}

std::vector<double> random_dist(std::mt19937_64& rng, std::size_t k) {
  std::vector<double> p(k);
  double z = 0.0;
  for (double& x : p) z += x = 0.05 + uniform01(rng);
  for (double& x : p) x /= z;
  return p;
}

// Scalar read-out with random weights so every output entry matters.
T project(const T& out, const T& weights) { return sum(mul(out, weights)); }

DepTree random_dep_tree(std::mt19937_64& rng, int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 1);
  for (int i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  DepTree t;
  t.heads.assign(n, 0);
  t.labels.assign(n, "dep");
  for (int k = 1; k < n; ++k) t.heads[order[k] - 1] = order[rng() % k];
  return t;
}

void random_split(std::mt19937_64& rng, int i, int j, int labels, std::vector<Span>& out) {
  out.push_back({i, j, rand_int(rng, 0, labels - 1)});
  if (j - i < 2) return;
  const int k = rand_int(rng, i + 1, j - 1);
  random_split(rng, i, k, labels, out);
  random_split(rng, k, j, labels, out);
}

BinTree random_bin_tree(std::mt19937_64& rng, int n, int labels) {
  BinTree t;
  t.n = n;
  random_split(rng, 0, n, labels, t.spans);
  t.normalize();
  return t;
}

class Suite {
 public:
  explicit Suite(const GradSuiteConfig& c) : config_(c), rng_(c.seed) {}

  void run(const std::string& name,
           const std::function<std::pair<std::function<T()>, std::vector<T>>(std::mt19937_64&)>& make) {
    GradSuiteEntry e;
    e.name = name;
    for (std::size_t k = 0; k < config_.instances; ++k) {
      auto [loss, inputs] = make(rng_);
      const auto r = gradcheck<double>(loss, inputs, config_.step, config_.floor);
      ++e.instances;
      if (!(r.max_rel_err < config_.tolerance)) ++e.failures;
      if (!(r.max_rel_err <= e.worst_rel_err)) {
        e.worst_rel_err = r.max_rel_err;
        e.worst_input = r.worst_input;
      }
    }
    entries_.push_back(std::move(e));
  }

  std::vector<GradSuiteEntry> take() { return std::move(entries_); }

 private:
  GradSuiteConfig config_;
  std::mt19937_64 rng_;
  std::vector<GradSuiteEntry> entries_;
};

using Made = std::pair<std::function<T()>, std::vector<T>>;

std::vector<T> with(std::vector<T> a, const std::vector<T>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Made cell_case(std::mt19937_64& rng, bool nary) {
  auto store = std::make_shared<ParamStore<double>>();
  const std::size_t in = rand_int(rng, 1, 6), d = rand_int(rng, 1, 6);
  const std::size_t arity = nary ? 2 : 0;
  auto p = std::make_shared<TreeCellParams<double>>(
      TreeCellParams<double>::create(*store, "c", in, d, arity, rng));
  const int kids = nary ? rand_int(rng, 0, 2) : rand_int(rng, 0, 3);
  auto children = std::make_shared<std::vector<CellState<double>>>();
  std::vector<T> inputs = store->tensors();
  for (int k = 0; k < kids; ++k) {
    children->push_back({random_tensor(rng, {1, d}, true), random_tensor(rng, {1, d}, true)});
    inputs.push_back(children->back().h);
    inputs.push_back(children->back().c);
  }
  const T x = random_tensor(rng, {1, in}, true);
  inputs.push_back(x);
  const T w = random_tensor(rng, {1, 2 * d}, false);
  auto loss = [store, p, children, x, w, nary] {
    const auto s = nary ? nary_step<double>(x, *children, *p) : childsum_step<double>(x, *children, *p);
    const T both[] = {s.h, s.c};
    return project(concat_cols<double>(both), w);
  };
  return {loss, inputs};
}

Made tree_case(std::mt19937_64& rng, bool con) {
  auto store = std::make_shared<ParamStore<double>>();
  const int n = rand_int(rng, 1, 5);
  const std::size_t in = rand_int(rng, 1, 6), d = rand_int(rng, 1, 6);
  auto topo = std::make_shared<Topology>(con ? bin_topology(random_bin_tree(rng, n, 3))
                                             : dep_topology(random_dep_tree(rng, n)));
  auto lstm = std::make_shared<TreeLstm<double>>(*store, "t", con ? CellKind::kNary : CellKind::kChildSum,
                                                 in, d, 2, Direction::kBoth, rng);
  const T x = random_tensor(rng, {topo->size(), in}, true);
  const T w = random_tensor(rng, {topo->size(), lstm->output_dim()}, false);
  return {[store, topo, lstm, x, w] { return project(lstm->encode(*topo, x), w); },
          with(store->tensors(), {x})};
}

Made gcn_case(std::mt19937_64& rng) {
  auto store = std::make_shared<ParamStore<double>>();
  const int n = rand_int(rng, 1, 5);
  const std::size_t d = rand_int(rng, 1, 6);
  const T A = dep_adjacency<double>(random_dep_tree(rng, n));
  auto gcn = std::make_shared<Gcn<double>>(*store, "g", d, 2, rng);
  // Inputs kept away from the relu kink.
  const T H = random_tensor(rng, {static_cast<std::size_t>(n), d}, true);
  const T w = random_tensor(rng, {static_cast<std::size_t>(n), d}, false);
  return {[store, gcn, A, H, w] { return project(gcn->encode(A, H), w); },
          with(store->tensors(), {H})};
}

Made bilstm_case(std::mt19937_64& rng) {
  auto store = std::make_shared<ParamStore<double>>();
  const std::size_t in = rand_int(rng, 1, 6), h = rand_int(rng, 1, 3);
  auto lstm = std::make_shared<BiLstm<double>>(*store, "b", in, h, 2, rng);
  const BatchLayout layout = BatchLayout::of(
      {static_cast<std::size_t>(rand_int(rng, 1, 5)), static_cast<std::size_t>(rand_int(rng, 1, 5))});
  const T x = random_tensor(rng, {layout.packed_rows(), in}, true);
  const T w = random_tensor(rng, {layout.packed_rows(), 2 * h}, false);
  const T wf = random_tensor(rng, {layout.packed_rows(), h}, false);
  return {[store, lstm, layout, x, w, wf] {
            const auto r = lstm->encode(x, layout);
            return add(project(r.packed, w), project(r.top_forward, wf));
          },
          with(store->tensors(), {x})};
}

Made output_case(std::mt19937_64& rng) {
  const std::size_t C = rand_int(rng, 2, 6);
  const int label = rand_int(rng, 0, static_cast<int>(C) - 1);
  std::vector<std::vector<double>> teachers;
  for (int k = rand_int(rng, 1, 4); k > 0; --k) teachers.push_back(random_dist(rng, C));
  const double alpha = uniform01(rng);
  const double temp = 0.5 + 2.0 * uniform01(rng);
  const T logits = random_tensor(rng, {1, C}, true, 2.0);
  return {[=] { return output_distill_loss(label, teachers, logits, alpha, temp); }, {logits}};
}

Made feature_case(std::mt19937_64& rng) {
  auto store = std::make_shared<ParamStore<double>>();
  const std::size_t n = rand_int(rng, 1, 5), d = rand_int(rng, 1, 6), k = rand_int(rng, 1, 6);
  const auto fs = Linear<double>::create(*store, "fs", d, k, rng);
  const T reps = random_tensor(rng, {n, d}, true);
  const T teacher = random_tensor(rng, {n, k}, false);
  return {[store, fs, reps, teacher] { return feat_distill(teacher, fs(reps)); },
          with(store->tensors(), {reps})};
}

Made combine_case(std::mt19937_64& rng) {
  const T a = random_tensor(rng, {1, 3}, true), b = random_tensor(rng, {1, 3}, true);
  const double eta = uniform01(rng);
  return {[=] { return combine_syn(sum(mul(a, a)), sum(tanh(b)), eta); }, {a, b}};
}

Made semantic_case(std::mt19937_64& rng) {
  const std::size_t q = rand_int(rng, 1, 5), v = rand_int(rng, 2, 6);
  std::vector<int> targets(q);
  for (int& t : targets) t = rand_int(rng, 0, static_cast<int>(v) - 1);
  const T logits = random_tensor(rng, {q, v}, true, 2.0);
  return {[=] { return semantic_lm_loss(logits, std::span<const int>(targets)); }, {logits}};
}

Made dep_case(std::mt19937_64& rng) {
  auto store = std::make_shared<ParamStore<double>>();
  const std::size_t n = rand_int(rng, 1, 5), d = rand_int(rng, 1, 6), labels = rand_int(rng, 2, 4);
  auto arc = std::make_shared<ArcScorer<double>>(
      ArcScorer<double>::create(*store, "arc", d, rand_int(rng, 1, 6), labels, rng));
  DepTarget target;
  target.n = n;
  target.labels = labels;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = random_dist(rng, n + 1);
    target.arcs.insert(target.arcs.end(), row.begin(), row.end());
    target.heads.push_back(rand_int(rng, 0, static_cast<int>(n)));
    const auto lab = random_dist(rng, labels);
    target.label_dist.insert(target.label_dist.end(), lab.begin(), lab.end());
  }
  const T reps = random_tensor(rng, {n, d}, true);
  return {[store, arc, target, reps] { return dep_inject_loss(target, (*arc)(reps)); },
          with(store->tensors(), {reps})};
}

Made con_case(std::mt19937_64& rng) {
  auto store = std::make_shared<ParamStore<double>>();
  const int n = rand_int(rng, 2, 5);
  const std::size_t d = rand_int(rng, 1, 6), labels = rand_int(rng, 2, 3);
  auto span = std::make_shared<SpanScorer<double>>(
      SpanScorer<double>::create(*store, "span", d, rand_int(rng, 1, 6), labels, rng));
  const BinTree ref = random_bin_tree(rng, n, static_cast<int>(labels));
  const T reps = random_tensor(rng, {static_cast<std::size_t>(n), d}, true);
  return {[store, span, ref, reps] { return con_inject_loss((*span)(reps), ref); },
          with(store->tensors(), {reps})};
}

Made reg_case(std::mt19937_64& rng) {
  std::vector<T> params;
  for (int k = rand_int(rng, 1, 4); k > 0; --k)
    params.push_back(random_tensor(rng, {static_cast<std::size_t>(rand_int(rng, 1, 6))}, true));
  const double zeta = uniform01(rng);
  return {[params, zeta] { return reg_loss<double>(params, zeta); }, params};
}

Made total_case(std::mt19937_64& rng) {
  const T a = random_tensor(rng, {1, 4}, true), b = random_tensor(rng, {1, 4}, true);
  const double l1 = uniform01(rng), l2 = uniform01(rng), zeta = uniform01(rng);
  return {[=] {
            LossComponents<double> parts;
            parts.output = sum(mul(a, b));
            parts.syn = sum(tanh(a));
            parts.sem = sum(sigmoid(b));
            const T ps[] = {a};
            parts.reg = reg_loss<double>(ps, zeta);
            return total_loss(parts, l1, l2);
          },
          {a, b}};
}

}  // namespace

std::vector<GradSuiteEntry> run_gradient_suite(const GradSuiteConfig& config) {
  Suite s(config);
  s.run("childsum-cell", [](auto& rng) { return cell_case(rng, false); });
  s.run("nary-cell", [](auto& rng) { return cell_case(rng, true); });
  s.run("treelstm-dep", [](auto& rng) { return tree_case(rng, false); });
  s.run("treelstm-con", [](auto& rng) { return tree_case(rng, true); });
  s.run("gcn", gcn_case);
  s.run("bilstm", bilstm_case);
  s.run("output-distill", output_case);
  s.run("feature-distill", feature_case);
  s.run("syntax-combine", combine_case);
  s.run("semantic-lm", semantic_case);
  s.run("dep-inject", dep_case);
  s.run("con-inject", con_case);
  s.run("regularizer", reg_case);
  s.run("total-loss", total_case);
  return s.take();
}

}  // namespace syndistill
