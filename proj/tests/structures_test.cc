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

#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "syndistill/structures.h"
#include "cyk_oracle.h"
#include "test_util.h"

namespace sd = syndistill;
using namespace syndistill::oracle;

namespace {

sd::LabelSet labels_for(const std::vector<sd::ConstTree>& trees) {
  std::vector<std::string> names;
  for (const auto& t : trees) {
    const auto more = sd::binarized_labels(t);
    names.insert(names.end(), more.begin(), more.end());
  }
  return sd::LabelSet::build(names, {sd::kNullLabel});
}

std::set<sd::Span> span_set(const sd::BinTree& t) { return {t.spans.begin(), t.spans.end()}; }

}  // namespace

TEST_CASE("span index enumerates spans in order") {
  for (int n = 1; n <= 9; ++n) {
    const auto spans = sd::enumerate_spans(n);
    REQUIRE(spans.size() == sd::span_count(n));
    for (std::size_t k = 0; k < spans.size(); ++k) {
      CHECK(sd::span_index(spans[k].first, spans[k].second, n) == k);
    }
  }
}

TEST_CASE("binarize: binary tree keeps its spans and gains leaves") {
  const auto tree = sd::parse_bracketed("(S (NP a b) (VP c d))")[0];
  const auto labels = labels_for({tree});
  const auto bt = sd::binarize(tree, labels);
  const int S = labels.id("S"), NP = labels.id("NP"), VP = labels.id("VP");
  const std::set<sd::Span> want = {{0, 4, S}, {0, 2, NP}, {2, 4, VP}, {0, 1, 0},
                                   {1, 2, 0}, {2, 3, 0},  {3, 4, 0}};
  CHECK(span_set(bt) == want);
  CHECK_FALSE(bt.error().has_value());
}

TEST_CASE("binarize: ternary node gains a right null span") {
  const auto tree = sd::parse_bracketed("(X (A a) (B b) (C c))")[0];
  const auto labels = labels_for({tree});
  const auto bt = sd::binarize(tree, labels);
  const std::set<sd::Span> want = {{0, 3, labels.id("X")}, {0, 1, labels.id("A")},
                                   {1, 3, sd::kNullLabelId}, {1, 2, labels.id("B")},
                                   {2, 3, labels.id("C")}};
  CHECK(span_set(bt) == want);
  CHECK(sd::render_bintree(bt, labels, tree.words()) ==
        "(X (A a) (\xE2\x88\x85 (B b) (C c)))");
}

TEST_CASE("binarize: unary chains collapse") {
  const auto tree = sd::parse_bracketed("(S (NP (NN dog)) (VP (VBZ runs)))")[0];
  const auto labels = labels_for({tree});
  const auto bt = sd::binarize(tree, labels);
  const std::set<sd::Span> want = {
      {0, 2, labels.id("S")}, {0, 1, labels.id("NP+NN")}, {1, 2, labels.id("VP+VBZ")}};
  CHECK(span_set(bt) == want);
  CHECK(sd::unbinarize(bt, labels, tree.words()) == tree);
}

TEST_CASE("binarize: round trip on 100 random trees") {
  std::mt19937_64 rng(5);
  std::vector<sd::ConstTree> trees;
  for (int i = 0; i < 100; ++i) trees.push_back(sd::testing::random_tree(rng, sd::testing::rand_int(rng, 1, 12)));
  const auto labels = labels_for(trees);
  for (const auto& t : trees) {
    const auto bt = sd::binarize(t, labels);
    REQUIRE_FALSE(bt.error().has_value());
    CHECK(bt.spans.size() == 2 * t.size() - 1);
    const auto back = sd::unbinarize(bt, labels, t.words());
    CHECK(back == t);
    CHECK(back.render() == t.render());
  }
}

TEST_CASE("bintree validation") {
  sd::BinTree ok{3, {{0, 3, 0}, {0, 1, 0}, {1, 3, 0}, {1, 2, 0}, {2, 3, 0}}};
  CHECK_FALSE(ok.error().has_value());
  sd::BinTree crossing{3, {{0, 3, 0}, {0, 2, 0}, {1, 3, 0}, {1, 2, 0}, {2, 3, 0}}};
  CHECK(crossing.error().has_value());
  sd::BinTree short_tree{3, {{0, 3, 0}, {0, 1, 0}, {1, 3, 0}}};
  CHECK(short_tree.error().has_value());
  CHECK(sd::BinTree{0, {}}.error().has_value());
}

TEST_CASE("cyk: n = 1 and n = 2") {
  sd::SpanScores one(1, 3);
  one.at(0, 1, 0) = 0.5;
  one.at(0, 1, 2) = 1.5;
  const auto r1 = sd::cyk_max(one);
  CHECK(r1.score == 1.5);
  CHECK(r1.tree.spans == std::vector<sd::Span>{{0, 1, 2}});

  std::mt19937_64 rng(2);
  const auto two = random_scores(rng, 2, 3, false);
  double expected = 0.0;
  for (auto [i, j] : {std::pair{0, 2}, std::pair{0, 1}, std::pair{1, 2}}) {
    double top = -INFINITY;
    for (int l = 0; l < 3; ++l) top = std::max(top, two.at(i, j, l));
    expected += top;
  }
  const auto r2 = sd::cyk_max(two);
  CHECK(r2.score == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r2.tree.spans.size() == 3);
  CHECK(r2.tree.spans[0].begin == 0);
  CHECK(r2.tree.spans[0].end == 2);
}

TEST_CASE("cyk: errors") {
  CHECK_THROWS_AS(sd::cyk_max(sd::SpanScores(0, 2)), std::invalid_argument);
  sd::SpanScores s(3, 2);
  sd::BinTree ref{2, {{0, 2, 0}, {0, 1, 0}, {1, 2, 0}}};
  CHECK_THROWS_AS(sd::cyk_augmented(s, ref), std::invalid_argument);
  CHECK_THROWS_AS(sd::hamming(ref, sd::BinTree{3, {}}), std::invalid_argument);
}

TEST_CASE("cyk: matches exhaustive enumeration") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = sd::testing::rand_int(rng, 1, 8);
    const int labels = sd::testing::rand_int(rng, 1, 3);
    // Integer tables make ties common, which exercises the tie-break.
    const auto s = random_scores(rng, n, labels, trial % 2 == 0);
    const auto ref = random_bintree(rng, n, labels);
    const auto fast = sd::cyk_max(s);
    const auto slow = brute_force(s, nullptr);
    CHECK(std::abs(fast.score - slow.score) < 1e-9);
    CHECK(fast.tree == slow.tree);
    const auto fast_aug = sd::cyk_augmented(s, ref);
    const auto slow_aug = brute_force(s, &ref);
    CHECK(std::abs(fast_aug.score - slow_aug.score) < 1e-9);
    CHECK(fast_aug.tree == slow_aug.tree);
  }
}

TEST_CASE("cyk: per-span labels agree with full labeled enumeration") {
  // Small cases where every labeling of every shape can be listed.
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = sd::testing::rand_int(rng, 1, 4);
    const int labels = 2;
    const auto s = random_scores(rng, n, labels, false);
    double best = -INFINITY;
    for (const auto& shape : shapes(0, n)) {
      const int m = static_cast<int>(shape.size());
      for (int code = 0; code < (1 << m); ++code) {
        double total = 0.0;
        for (int k = 0; k < m; ++k) total += s.at(shape[k].first, shape[k].second, (code >> k) & 1);
        best = std::max(best, total);
      }
    }
    CHECK(std::abs(sd::cyk_max(s).score - best) < 1e-9);
  }
}

TEST_CASE("cyk: properties") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = sd::testing::rand_int(rng, 1, 10);
    const int labels = sd::testing::rand_int(rng, 1, 4);
    const auto s = random_scores(rng, n, labels, false);
    const auto best = sd::cyk_max(s);
    CHECK_FALSE(best.tree.error().has_value());
    CHECK(std::abs(sd::tree_score(s, best.tree) - best.score) < 1e-9);
    for (int k = 0; k < 20; ++k) {
      CHECK(best.score >= sd::tree_score(s, random_bintree(rng, n, labels)) - 1e-12);
    }
    const auto ref = random_bintree(rng, n, labels);
    const auto aug = sd::cyk_augmented(s, ref);
    CHECK(aug.score >= best.score - 1e-12);
    // The augmented chart score splits into model score plus hamming cost.
    CHECK(std::abs(aug.score - sd::tree_score(s, aug.tree) - sd::hamming(aug.tree, ref)) < 1e-9);
  }
}

TEST_CASE("cyk_augmented: satisfied margin returns the reference") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = sd::testing::rand_int(rng, 1, 8);
    const auto ref = random_bintree(rng, n, 3);
    sd::SpanScores s(n, 3);
    for (const auto& sp : ref.spans) s.at(sp.begin, sp.end, sp.label) = 100.0;
    const auto r = sd::cyk_augmented(s, ref);
    CHECK(r.tree == ref);
    CHECK(sd::hamming(r.tree, ref) == 0);
    CHECK(r.score == doctest::Approx(sd::tree_score(s, ref)));
  }
}

TEST_CASE("cyk_augmented: zero scores over three tokens") {
  const sd::BinTree ref{3, {{0, 3, 0}, {0, 1, 0}, {1, 3, 0}, {1, 2, 0}, {2, 3, 0}}};
  const sd::SpanScores zero(3, 1);
  const auto r = sd::cyk_augmented(zero, ref);
  const auto slow = brute_force(zero, &ref);
  CHECK(r.score == slow.score);
  CHECK(r.tree == slow.tree);
  // With one label only the (0, 2) bracket can differ from the reference.
  CHECK(r.score == 1.0);
  CHECK(sd::hamming(r.tree, ref) == 1);
}

TEST_CASE("cyk_augmented: n = 2 only relabels") {
  const sd::BinTree ref{2, {{0, 2, 1}, {0, 1, 1}, {1, 2, 1}}};
  const sd::SpanScores zero(2, 2);
  const auto r = sd::cyk_augmented(zero, ref);
  CHECK(r.tree == sd::BinTree{2, {{0, 2, 0}, {0, 1, 0}, {1, 2, 0}}});
  CHECK(r.score == 3.0);
}

TEST_CASE("hamming") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = sd::testing::rand_int(rng, 1, 9);
    const auto a = random_bintree(rng, n, 2);
    const auto b = random_bintree(rng, n, 2);
    CHECK(sd::hamming(a, a) == 0);
    const auto sa = span_set(a), sb = span_set(b);
    int diff = 0;
    for (const auto& sp : sa) diff += sb.count(sp) ? 0 : 1;
    CHECK(sd::hamming(a, b) == diff);
    CHECK((sd::hamming(a, b) == 0) == (sa == sb));
  }
  sd::BinTree t{2, {{0, 2, 0}, {0, 1, 0}, {1, 2, 0}}};
  sd::BinTree u{2, {{0, 2, 1}, {0, 1, 1}, {1, 2, 1}}};
  CHECK(sd::hamming(t, u) == 3);
}

TEST_CASE("score indices address the flat table") {
  std::mt19937_64 rng(41);
  const auto s = random_scores(rng, 5, 3, false);
  const auto t = random_bintree(rng, 5, 3);
  double total = 0.0;
  for (auto idx : sd::score_indices(s, t)) total += s.values[idx];
  CHECK(total == doctest::Approx(sd::tree_score(s, t)));
}

namespace {

// Arc (h, d) with h, d in 0..n (0 = root) crosses no other arc and every
// token between them descends from h.
bool projective(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  for (int d = 1; d <= n; ++d) {
    const int h = heads[d - 1];
    for (int k = std::min(h, d) + 1; k < std::max(h, d); ++k) {
      int cur = k;
      while (cur != 0 && cur != h) cur = heads[cur - 1];
      if (cur != h) return false;
    }
  }
  return true;
}

double arc_total(const std::vector<double>& arcs, const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += arcs[i * (n + 1) + heads[i]];
  return s;
}

}  // namespace

TEST_CASE("eisner: matches exhaustive search over projective trees") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = sd::testing::rand_int(rng, 1, 6);
    std::vector<double> arcs(n * (n + 1));
    for (double& a : arcs) a = normal(rng);
    double best = -1e300;
    std::vector<int> argbest;
    std::vector<int> heads(n, 0);
    for (;;) {
      if (!sd::dep_tree_error(heads) && projective(heads)) {
        const double s = arc_total(arcs, heads);
        if (s > best) best = s, argbest = heads;
      }
      int k = 0;
      while (k < n && ++heads[k] > n) heads[k++] = 0;
      if (k == n) break;
    }
    const auto fast = sd::eisner(arcs, n);
    CHECK(std::abs(fast.score - best) < 1e-9);
    CHECK(fast.heads == argbest);
    CHECK(std::abs(arc_total(arcs, fast.heads) - fast.score) < 1e-9);
  }
}

TEST_CASE("eisner: one root, and errors") {
  // Every token prefers the root, but only one may take it.
  const std::vector<double> arcs = {5, 0, 0, 5, 0, 0};
  const auto p = sd::eisner(arcs, 2);
  CHECK(std::count(p.heads.begin(), p.heads.end(), 0) == 1);
  CHECK_THROWS_AS(sd::eisner(arcs, 0), std::invalid_argument);
  CHECK_THROWS_AS(sd::eisner(std::vector<double>(5), 2), std::invalid_argument);
}
