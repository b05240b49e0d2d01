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

// Random structures shared by the tests.

#ifndef SYNDISTILL_TESTS_TEST_UTIL_H_
#define SYNDISTILL_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "syndistill/syntax_data.h"

namespace syndistill::testing {

inline int rand_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Bracketed text of a random tree over n leaves with irregular whitespace.
// Nodes have up to four children, unary chains occur, and some words are
// bare (no preterminal) when their parent has siblings for them.
class RandomTreeText {
 public:
  explicit RandomTreeText(std::mt19937_64& rng) : rng_(rng) {}

  std::string tree(int n) {
    next_word_ = 0;
    return "(" + phrase_label() + space() + node(n, 0) + ")";
  }

 private:
  std::string space() { return std::string(rand_int(rng_, 1, 3), rand_int(rng_, 0, 3) ? ' ' : '\n'); }
  std::string phrase_label() {
    static const char* kLabels[] = {"S", "NP", "VP", "PP", "SBAR"};
    return kLabels[rand_int(rng_, 0, 4)];
  }
  std::string word() {
    static const char* kWords[] = {"the", "dog", "runs", "a", "cat", "sees", "caf\xC3\xA9"};
    return std::string(kWords[rand_int(rng_, 0, 6)]) + std::to_string(next_word_++);
  }

  // Children of a labeled node spanning n leaves, separated by spaces.
  std::string node(int n, int depth) {
    if (n == 1) {
      if (depth < 3 && rand_int(rng_, 0, 3) == 0) {
        return "(" + phrase_label() + space() + node(1, depth + 1) + ")";
      }
      static const char* kTags[] = {"DT", "NN", "VBZ"};
      return "(" + std::string(kTags[rand_int(rng_, 0, 2)]) + " " + word() + ")";
    }
    if (depth < 3 && rand_int(rng_, 0, 5) == 0) {
      return "(" + phrase_label() + space() + node(n, depth + 1) + ")";
    }
    const int k = rand_int(rng_, 2, std::min(n, 4));
    std::vector<int> sizes(k, 1);
    for (int extra = n - k; extra > 0; --extra) ++sizes[rand_int(rng_, 0, k - 1)];
    std::string out;
    for (int c = 0; c < k; ++c) {
      if (c) out += space();
      if (sizes[c] == 1 && rand_int(rng_, 0, 3) == 0) {
        out += word();
      } else {
        out += "(" + phrase_label() + space() + node(sizes[c], depth + 1) + ")";
      }
    }
    return out;
  }

  std::mt19937_64& rng_;
  int next_word_ = 0;
};

inline ConstTree random_tree(std::mt19937_64& rng, int n) {
  RandomTreeText gen(rng);
  return parse_bracketed(gen.tree(n)).at(0);
}

}  // namespace syndistill::testing

#endif  // SYNDISTILL_TESTS_TEST_UTIL_H_
