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

// Synthetic agreement corpus. Sentences come from a small recursive grammar
// with prepositional and relative-clause modifiers; every example carries its
// exact constituency tree and a dependency tree obtained by head percolation.
//
// The class label says whether the main verb agrees in number with the head
// noun of the subject. Modifier nouns act as attractors, so bag-of-words
// features cannot recover it while the subject-verb arc does.

#ifndef SYNDISTILL_SYNTHETIC_H_
#define SYNDISTILL_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "syndistill/syntax_data.h"

namespace syndistill {

// Inflected word pairs: first = singular, second = plural.
struct Lexicon {
  std::vector<std::pair<std::string, std::string>> nouns;
  std::vector<std::pair<std::string, std::string>> transitive;    // verbs
  std::vector<std::pair<std::string, std::string>> intransitive;  // verbs
  std::vector<std::string> adjectives;
  std::vector<std::string> prepositions;

  // `size` entries per open class; past the built-in words, numbered
  // pseudo-words are added.
  static Lexicon with_size(int size);
};

struct SyntheticConfig {
  int grammar_size = 6;
  std::size_t n_examples = 100;
  int max_len = 20;
  std::uint64_t seed = 7;
  TaskKind task = TaskKind::kClassify;
  double adj_prob = 0.25;
  double pp_prob = 0.3;
  double rc_prob = 0.35;
  double transitive_prob = 0.5;
};

// Throws std::invalid_argument on out-of-range settings and DataError for a
// degenerate lexicon.
std::vector<Example> gen_synthetic(const SyntheticConfig& config);
std::vector<Example> gen_synthetic(const SyntheticConfig& config, const Lexicon& lexicon);

// Dependency tree from head percolation over a constituency tree.
DepTree percolate_heads(const ConstTree& tree);

// 1 when the main verb agrees with the subject head, read off the tree.
int agreement_label(const ConstTree& tree);
// BIO tags for subject (A0), object (A1) and main verb (V), plus its index.
TagPayload predicate_tags(const ConstTree& tree);

}  // namespace syndistill

#endif  // SYNDISTILL_SYNTHETIC_H_
