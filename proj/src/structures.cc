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

#include "syndistill/structures.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <stdexcept>

namespace syndistill {

std::vector<std::pair<int, int>> enumerate_spans(int n) {
  std::vector<std::pair<int, int>> out;
  out.reserve(span_count(n));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j <= n; ++j) out.emplace_back(i, j);
  return out;
}

SpanScores::SpanScores(int n_, int num_labels_)
    : n(n_), num_labels(num_labels_), values(span_count(n_) * num_labels_, 0.0) {}

// ---- BinTree --------------------------------------------------------------

void BinTree::normalize() {
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    if (a.end != b.end) return a.end > b.end;
    return a.label < b.label;
  });
}

namespace {

// Checks the subtree rooted at spans[pos]; returns the position after it.
std::size_t check_subtree(const std::vector<Span>& spans, std::size_t pos,
                          std::string& err) {
  if (!err.empty()) return pos;
  if (pos >= spans.size()) {
    err = "missing child span";
    return pos;
  }
  const Span& s = spans[pos];
  if (s.end - s.begin == 1) return pos + 1;
  if (pos + 1 >= spans.size() || spans[pos + 1].begin != s.begin ||
      spans[pos + 1].end >= s.end) {
    err = "span (" + std::to_string(s.begin) + ", " + std::to_string(s.end) +
          ") lacks a left child";
    return pos;
  }
  const int split = spans[pos + 1].end;
  std::size_t next = check_subtree(spans, pos + 1, err);
  if (!err.empty()) return next;
  if (next >= spans.size() || spans[next].begin != split || spans[next].end != s.end) {
    err = "span (" + std::to_string(s.begin) + ", " + std::to_string(s.end) +
          ") lacks a right child";
    return next;
  }
  return check_subtree(spans, next, err);
}

}  // namespace

std::optional<std::string> BinTree::error() const {
  if (n < 1) return "empty bracketing";
  if (spans.size() != static_cast<std::size_t>(2 * n - 1)) {
    return "expected " + std::to_string(2 * n - 1) + " spans, got " +
           std::to_string(spans.size());
  }
  BinTree sorted = *this;
  sorted.normalize();
  if (sorted.spans[0].begin != 0 || sorted.spans[0].end != n) return "root span is not (0, n)";
  std::string err;
  const std::size_t end = check_subtree(sorted.spans, 0, err);
  if (!err.empty()) return err;
  if (end != sorted.spans.size()) return "spans outside the root subtree";
  return std::nullopt;
}

// ---- Binarization ---------------------------------------------------------

namespace {

struct Binarizer {
  const ConstTree& tree;
  const LabelSet* labels;  // null when only collecting label strings
  std::vector<Span> spans;
  std::vector<std::string> names;

  int label_id(const std::string& name) {
    names.push_back(name);
    return labels ? labels->id_or(name, kNullLabelId) : kNullLabelId;
  }

  // Emits spans for node `i` starting at token `begin`; returns the end.
  int node(int i, int begin) {
    const ConstNode* cur = &tree.node(i);
    if (cur->is_word()) {
      spans.push_back({begin, begin + 1, kNullLabelId});
      return begin + 1;
    }
    std::string chain = cur->label;
    while (cur->children.size() == 1 && !tree.node(cur->children[0]).is_word()) {
      cur = &tree.node(cur->children[0]);
      chain += "+" + cur->label;
    }
    const int id = label_id(chain);
    if (cur->children.size() == 1) {
      spans.push_back({begin, begin + 1, id});
      return begin + 1;
    }
    const std::size_t at = spans.size();
    spans.push_back({begin, -1, id});
    const int end = children(cur->children, 0, begin);
    spans[at].end = end;
    return end;
  }

  // Right-branching: c_k, then a null node over c_{k+1}..c_last.
  int children(const std::vector<int>& kids, std::size_t k, int begin) {
    const int mid = node(kids[k], begin);
    if (kids.size() - k == 2) return node(kids[k + 1], mid);
    const std::size_t at = spans.size();
    spans.push_back({mid, -1, kNullLabelId});
    const int end = children(kids, k + 1, mid);
    spans[at].end = end;
    return end;
  }
};

// Builds ConstTree nodes for the subtree at spans[pos]; returns the node ids
// to attach to the parent and the position after the subtree.
struct Unbinarizer {
  const std::vector<Span>& spans;
  const LabelSet& labels;
  const std::vector<std::string>& words;
  ConstTree out;

  static std::vector<std::string> split_chain(const std::string& label) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const std::size_t plus = label.find('+', start);
      parts.push_back(label.substr(start, plus - start));
      if (plus == std::string::npos) break;
      start = plus + 1;
    }
    return parts;
  }

  int wrap(int label, std::vector<int> kids) {
    const auto parts = split_chain(labels.label(label));
    int node = out.add_node(parts.back(), std::move(kids));
    for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it) node = out.add_node(*it, {node});
    return node;
  }

  std::pair<std::vector<int>, std::size_t> build(std::size_t pos, bool is_root) {
    const Span& s = spans[pos];
    if (s.end - s.begin == 1) {
      const int word = out.add_word(words.at(s.begin));
      if (s.label == kNullLabelId) {
        if (is_root) return {{out.add_node(kNullLabel, {word})}, pos + 1};
        return {{word}, pos + 1};
      }
      return {{wrap(s.label, {word})}, pos + 1};
    }
    auto [left, next] = build(pos + 1, false);
    auto [right, after] = build(next, false);
    left.insert(left.end(), right.begin(), right.end());
    if (s.label == kNullLabelId) {
      if (is_root) return {{out.add_node(kNullLabel, std::move(left))}, after};
      return {std::move(left), after};
    }
    return {{wrap(s.label, std::move(left))}, after};
  }
};

void render_span(const std::vector<Span>& spans, std::size_t& pos, const LabelSet& labels,
                 const std::vector<std::string>& words, std::string& out) {
  const Span& s = spans[pos++];
  if (s.end - s.begin == 1) {
    if (s.label == kNullLabelId) {
      out += words.at(s.begin);
    } else {
      out += "(" + labels.label(s.label) + " " + words.at(s.begin) + ")";
    }
    return;
  }
  out += "(" + labels.label(s.label) + " ";
  render_span(spans, pos, labels, words, out);
  out += " ";
  render_span(spans, pos, labels, words, out);
  out += ")";
}

}  // namespace

BinTree binarize(const ConstTree& tree, const LabelSet& labels) {
  if (auto err = tree.error()) throw std::invalid_argument("binarize: " + *err);
  Binarizer b{tree, &labels, {}, {}};
  b.node(tree.root(), 0);
  BinTree out{static_cast<int>(tree.size()), std::move(b.spans)};
  out.normalize();
  return out;
}

std::vector<std::string> binarized_labels(const ConstTree& tree) {
  Binarizer b{tree, nullptr, {}, {}};
  b.node(tree.root(), 0);
  return b.names;
}

ConstTree unbinarize(const BinTree& tree, const LabelSet& labels,
                     const std::vector<std::string>& words) {
  if (auto err = tree.error()) throw std::invalid_argument("unbinarize: " + *err);
  if (words.size() != static_cast<std::size_t>(tree.n)) {
    throw std::invalid_argument("unbinarize: " + std::to_string(words.size()) +
                                " words for a tree over " + std::to_string(tree.n));
  }
  BinTree sorted = tree;
  sorted.normalize();
  Unbinarizer u{sorted.spans, labels, words, {}};
  auto [roots, _] = u.build(0, true);
  u.out.set_root(roots.front());
  return std::move(u.out);
}

std::string render_bintree(const BinTree& t, const LabelSet& labels,
                           const std::vector<std::string>& words) {
  BinTree sorted = t;
  sorted.normalize();
  std::string out;
  std::size_t pos = 0;
  render_span(sorted.spans, pos, labels, words, out);
  return out;
}

// ---- CYK ------------------------------------------------------------------

namespace {

ChartResult cyk(const SpanScores& s, const BinTree* ref) {
  const int n = s.n;
  if (n <= 0) throw std::invalid_argument("cyk: sentence length must be positive");
  if (s.num_labels <= 0 || s.values.size() != span_count(n) * s.num_labels) {
    throw std::invalid_argument("cyk: incomplete span score table");
  }
  if (ref && ref->n != n) {
    throw std::invalid_argument("cyk: reference tree over " + std::to_string(ref->n) +
                                " tokens, scores over " + std::to_string(n));
  }
  const std::size_t cells = span_count(n);
  std::vector<int> ref_label(cells, -1);
  if (ref) {
    for (const Span& sp : ref->spans) ref_label[span_index(sp.begin, sp.end, n)] = sp.label;
  }
  std::vector<double> best(cells);
  std::vector<int> best_label(cells), best_split(cells, -1);
  for (int len = 1; len <= n; ++len) {
    for (int i = 0; i + len <= n; ++i) {
      const int j = i + len;
      const std::size_t c = span_index(i, j, n);
      double label_score = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int l = 0; l < s.num_labels; ++l) {
        double v = s.values[c * s.num_labels + l];
        if (ref && ref_label[c] != l) v += 1.0;
        if (v > label_score) {
          label_score = v;
          arg = l;
        }
      }
      double inside = 0.0;
      int split = -1;
      if (len > 1) {
        inside = -std::numeric_limits<double>::infinity();
        for (int k = i + 1; k < j; ++k) {
          const double v = best[span_index(i, k, n)] + best[span_index(k, j, n)];
          if (v > inside) {
            inside = v;
            split = k;
          }
        }
      }
      best[c] = label_score + inside;
      best_label[c] = arg;
      best_split[c] = split;
    }
  }
  ChartResult result;
  result.tree.n = n;
  result.score = best[span_index(0, n, n)];
  std::vector<std::pair<int, int>> stack = {{0, n}};
  while (!stack.empty()) {
    auto [i, j] = stack.back();
    stack.pop_back();
    const std::size_t c = span_index(i, j, n);
    result.tree.spans.push_back({i, j, best_label[c]});
    if (j - i > 1) {
      stack.emplace_back(best_split[c], j);
      stack.emplace_back(i, best_split[c]);
    }
  }
  result.tree.normalize();
  return result;
}

}  // namespace

ChartResult cyk_max(const SpanScores& scores) { return cyk(scores, nullptr); }

ChartResult cyk_augmented(const SpanScores& scores, const BinTree& ref) {
  return cyk(scores, &ref);
}

int hamming(const BinTree& t, const BinTree& ref) {
  if (t.n != ref.n) {
    throw std::invalid_argument("hamming: trees over " + std::to_string(t.n) + " and " +
                                std::to_string(ref.n) + " tokens");
  }
  BinTree sorted = ref;
  sorted.normalize();
  auto less = [](const Span& a, const Span& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    if (a.end != b.end) return a.end > b.end;
    return a.label < b.label;
  };
  int missing = 0;
  for (const Span& s : t.spans) {
    if (!std::binary_search(sorted.spans.begin(), sorted.spans.end(), s, less)) ++missing;
  }
  return missing;
}

double tree_score(const SpanScores& scores, const BinTree& t) {
  double total = 0.0;
  for (const Span& s : t.spans) total += scores.at(s.begin, s.end, s.label);
  return total;
}

std::vector<std::size_t> score_indices(const SpanScores& scores, const BinTree& t) {
  if (t.n != scores.n) throw std::invalid_argument("score_indices: length mismatch");
  std::vector<std::size_t> idx;
  idx.reserve(t.spans.size());
  for (const Span& s : t.spans) {
    if (s.label < 0 || s.label >= scores.num_labels) {
      throw std::out_of_range("score_indices: label " + std::to_string(s.label) +
                              " outside the score table");
    }
    idx.push_back(scores.flat_index(s.begin, s.end, s.label));
  }
  return idx;
}

DepParse eisner(std::span<const double> arcs, int n) {
  if (n < 1) throw std::invalid_argument("eisner: empty sentence");
  if (arcs.size() != static_cast<std::size_t>(n) * (n + 1)) {
    throw std::invalid_argument("eisner: " + std::to_string(arcs.size()) + " scores for " +
                                std::to_string(n) + " tokens");
  }
  // Token-to-token score of head h for dependent d, both 0-based.
  auto arc = [&](int h, int d) { return arcs[static_cast<std::size_t>(d) * (n + 1) + h + 1]; };
  const double kNone = -std::numeric_limits<double>::infinity();
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  // [dir][i * n + j]; dir 0 = head at j, 1 = head at i.
  std::vector<double> C[2], I[2];
  std::vector<int> Cs[2], Is[2];
  for (int d = 0; d < 2; ++d) {
    C[d].assign(cells, kNone);
    I[d].assign(cells, kNone);
    Cs[d].assign(cells, -1);
    Is[d].assign(cells, -1);
  }
  auto at = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };
  for (int i = 0; i < n; ++i) C[0][at(i, i)] = C[1][at(i, i)] = 0.0;
  for (int len = 1; len < n; ++len) {
    for (int i = 0; i + len < n; ++i) {
      const int j = i + len;
      double best = kNone;
      int split = -1;
      for (int k = i; k < j; ++k) {
        const double v = C[1][at(i, k)] + C[0][at(k + 1, j)];
        if (v > best) best = v, split = k;
      }
      I[0][at(i, j)] = best + arc(j, i);
      I[1][at(i, j)] = best + arc(i, j);
      Is[0][at(i, j)] = Is[1][at(i, j)] = split;
      best = kNone;
      for (int k = i; k < j; ++k) {
        const double v = C[0][at(i, k)] + I[0][at(k, j)];
        if (v > best) best = v, split = k;
      }
      C[0][at(i, j)] = best;
      Cs[0][at(i, j)] = split;
      best = kNone;
      for (int k = i + 1; k <= j; ++k) {
        const double v = I[1][at(i, k)] + C[1][at(k, j)];
        if (v > best) best = v, split = k;
      }
      C[1][at(i, j)] = best;
      Cs[1][at(i, j)] = split;
    }
  }
  DepParse out;
  out.heads.assign(n, 0);
  out.score = kNone;
  int root = -1;
  for (int r = 0; r < n; ++r) {
    const double v = C[0][at(0, r)] + C[1][at(r, n - 1)] + arcs[static_cast<std::size_t>(r) * (n + 1)];
    if (v > out.score) out.score = v, root = r;
  }
  std::function<void(int, int, int, bool)> walk = [&](int i, int j, int dir, bool complete) {
    if (i == j) return;
    if (complete) {
      const int k = Cs[dir][at(i, j)];
      if (dir == 0) {
        walk(i, k, 0, true);
        walk(k, j, 0, false);
      } else {
        walk(i, k, 1, false);
        walk(k, j, 1, true);
      }
      return;
    }
    const int k = Is[dir][at(i, j)];
    if (dir == 0) out.heads[i] = j + 1;
    else out.heads[j] = i + 1;
    walk(i, k, 1, true);
    walk(k + 1, j, 0, true);
  };
  walk(0, root, 0, true);
  walk(root, n - 1, 1, true);
  out.heads[root] = 0;
  return out;
}

}  // namespace syndistill
