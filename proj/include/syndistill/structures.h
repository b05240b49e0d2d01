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

// Learning-free chart algorithms over labeled binary bracketings.
//
// Span labels are ids into a constituent LabelSet whose id 0 is the null
// label (kNullLabel): it marks nodes introduced by binarization and bare
// words with no preterminal. Unary chains are collapsed into a single label
// joined with '+', e.g. "NP+NN".

#ifndef SYNDISTILL_STRUCTURES_H_
#define SYNDISTILL_STRUCTURES_H_

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "syndistill/syntax_data.h"

namespace syndistill {

inline constexpr char kNullLabel[] = "\xE2\x88\x85";  // U+2205
inline constexpr int kNullLabelId = 0;

struct Span {
  int begin = 0;
  int end = 0;
  int label = kNullLabelId;
  auto operator<=>(const Span&) const = default;
};

// Index of span (i, j), 0 <= i < j <= n, in row-major order over i.
inline std::size_t span_index(int i, int j, int n) {
  return static_cast<std::size_t>(i) * (2 * n - i + 1) / 2 + (j - i - 1);
}
inline std::size_t span_count(int n) { return static_cast<std::size_t>(n) * (n + 1) / 2; }
// Inverse of span_index.
std::vector<std::pair<int, int>> enumerate_spans(int n);

// Scores for every span and every label (null included).
struct SpanScores {
  int n = 0;
  int num_labels = 0;
  std::vector<double> values;  // [span_count(n) x num_labels]

  SpanScores() = default;
  SpanScores(int n, int num_labels);
  double& at(int i, int j, int label) {
    return values[span_index(i, j, n) * num_labels + label];
  }
  double at(int i, int j, int label) const {
    return values[span_index(i, j, n) * num_labels + label];
  }
  std::size_t flat_index(int i, int j, int label) const {
    return span_index(i, j, n) * num_labels + label;
  }
};

// Full binary bracketing of (0, n): 2n - 1 labeled spans including the n
// single-token spans, kept sorted in preorder (begin asc, end desc).
struct BinTree {
  int n = 0;
  std::vector<Span> spans;

  bool operator==(const BinTree&) const = default;
  // Empty when the span set is a valid full binary bracketing.
  std::optional<std::string> error() const;
  void normalize();
};

// Right-branching binarization; unary chains are collapsed.
BinTree binarize(const ConstTree& tree, const LabelSet& labels);
// Inverse of binarize: null-labeled nodes are spliced into their parent and
// collapsed chains are expanded. A null-labeled root is kept as kNullLabel.
ConstTree unbinarize(const BinTree& tree, const LabelSet& labels,
                     const std::vector<std::string>& words);

// Every label string (collapsed chains included) that binarize may emit.
std::vector<std::string> binarized_labels(const ConstTree& tree);

struct ChartResult {
  BinTree tree;
  double score = 0.0;
};

// Highest-scoring binary tree; each span takes its best label. Ties go to the
// lowest split point, then the lowest label id. O(n^3 + n^2 |L|).
ChartResult cyk_max(const SpanScores& scores);
// As cyk_max, but each labeled span absent from `ref` earns +1, so the result
// maximizes Scr(t) + hamming(t, ref).
ChartResult cyk_augmented(const SpanScores& scores, const BinTree& ref);

// Labeled spans of t missing from ref.
int hamming(const BinTree& t, const BinTree& ref);
// Sum of the scores of t's labeled spans.
double tree_score(const SpanScores& scores, const BinTree& t);
// Flat score indices of t's labeled spans (for differentiable gathers).
std::vector<std::size_t> score_indices(const SpanScores& scores, const BinTree& t);

struct DepParse {
  std::vector<int> heads;  // 1-based head per token, 0 = root
  double score = 0.0;
};

// Highest-scoring projective dependency tree with exactly one root child
// (Eisner's algorithm). `arcs` is row-major [n, n + 1]: entry (i, j) scores
// head j (0 = root, j = token j - 1) for token i, the layout of ArcScores.
// Self-loop entries are ignored. O(n^3).
DepParse eisner(std::span<const double> arcs, int n);

// "(S (NP the dog) (VP runs))"-style text with null labels shown.
std::string render_bintree(const BinTree& t, const LabelSet& labels,
                           const std::vector<std::string>& words);

}  // namespace syndistill

#endif  // SYNDISTILL_STRUCTURES_H_
