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

// Exhaustive CYK reference shared by the chart tests and the acceptance run.

#ifndef SYNDISTILL_TESTS_CYK_ORACLE_H_
#define SYNDISTILL_TESTS_CYK_ORACLE_H_

#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "syndistill/structures.h"
#include "test_util.h"

namespace syndistill::oracle {

// Every binary bracketing of (i, j) as unlabeled span lists, in order of
// ascending root split, then left subtree order, then right subtree order.
inline std::vector<std::vector<std::pair<int, int>>> shapes(int i, int j) {
  if (j - i == 1) return {{{i, j}}};
  std::vector<std::vector<std::pair<int, int>>> out;
  for (int k = i + 1; k < j; ++k) {
    for (const auto& left : shapes(i, k)) {
      for (const auto& right : shapes(k, j)) {
        std::vector<std::pair<int, int>> t = {{i, j}};
        t.insert(t.end(), left.begin(), left.end());
        t.insert(t.end(), right.begin(), right.end());
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

struct Brute {
  syndistill::BinTree tree;
  double score = -INFINITY;
};

// Exhaustive search over shapes; each span takes its best label, lowest id
// first. The first strictly better tree wins, which is the documented order.
inline Brute brute_force(const syndistill::SpanScores& s, const syndistill::BinTree* ref) {
  std::set<syndistill::Span> ref_spans;
  if (ref) ref_spans.insert(ref->spans.begin(), ref->spans.end());
  Brute best;
  for (const auto& shape : shapes(0, s.n)) {
    syndistill::BinTree t{s.n, {}};
    double total = 0.0;
    for (auto [i, j] : shape) {
      int arg = 0;
      double top = -INFINITY;
      for (int l = 0; l < s.num_labels; ++l) {
        double v = s.at(i, j, l);
        if (ref && !ref_spans.count({i, j, l})) v += 1.0;
        if (v > top) {
          top = v;
          arg = l;
        }
      }
      total += top;
      t.spans.push_back({i, j, arg});
    }
    if (total > best.score) {
      t.normalize();
      best = {t, total};
    }
  }
  return best;
}

inline syndistill::SpanScores random_scores(std::mt19937_64& rng, int n, int labels, bool integer) {
  syndistill::SpanScores s(n, labels);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (double& v : s.values) v = integer ? testing::rand_int(rng, -2, 2) : u(rng);
  return s;
}

inline void random_bintree(std::mt19937_64& rng, int i, int j, int labels, syndistill::BinTree& out) {
  out.spans.push_back({i, j, testing::rand_int(rng, 0, labels - 1)});
  if (j - i == 1) return;
  const int k = testing::rand_int(rng, i + 1, j - 1);
  random_bintree(rng, i, k, labels, out);
  random_bintree(rng, k, j, labels, out);
}

inline syndistill::BinTree random_bintree(std::mt19937_64& rng, int n, int labels) {
  syndistill::BinTree t{n, {}};
  random_bintree(rng, 0, n, labels, t);
  t.normalize();
  return t;
}

}  // namespace syndistill::oracle

#endif  // SYNDISTILL_TESTS_CYK_ORACLE_H_
