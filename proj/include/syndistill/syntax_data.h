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

// Tree-annotated sentences: dependency trees, constituency trees, task
// payloads, vocabularies, and the text formats they are read from.

#ifndef SYNDISTILL_SYNTAX_DATA_H_
#define SYNDISTILL_SYNTAX_DATA_H_

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace syndistill {

// Malformed input. `location` is a 1-based line number or a 0-based
// character offset depending on the format; what() carries both.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& message, std::size_t location)
      : std::runtime_error(message), location_(location) {}
  std::size_t location() const { return location_; }

 private:
  std::size_t location_;
};

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kMaskId = 2;
inline constexpr char kPadToken[] = "<pad>";
inline constexpr char kUnkToken[] = "<unk>";
inline constexpr char kMaskToken[] = "<mask>";

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<int> ids;  // filled by Vocab::encode
  std::size_t size() const { return tokens.size(); }
};

// heads[i] is the 1-based head of token i + 1; 0 marks the virtual root.
struct DepTree {
  std::vector<int> heads;
  std::vector<std::string> labels;
  std::size_t size() const { return heads.size(); }
};

// Empty when `heads` forms a single-rooted tree over tokens 1..n, otherwise a
// description such as "cycle at token 1" or "2 tokens attach to the root".
std::optional<std::string> dep_tree_error(const std::vector<int>& heads);

// Children of each position 0..n (0 = root), in ascending order.
std::vector<std::vector<int>> dep_children(const DepTree& tree);

struct LabeledSpan {
  int begin = 0;  // half-open token span
  int end = 0;
  std::string label;
  auto operator<=>(const LabeledSpan&) const = default;
};

// Phrase-structure tree. Word nodes carry a token index and no label;
// internal nodes carry a label and at least one child.
struct ConstNode {
  std::string label;
  std::vector<int> children;
  int token = -1;
  bool is_word() const { return token >= 0; }
};

class ConstTree {
 public:
  ConstTree() = default;

  // Builders used by parsers and generators.
  int add_word(std::string word);
  int add_node(std::string label, std::vector<int> children);
  void set_root(int root) { root_ = root; }

  int root() const { return root_; }
  const std::vector<ConstNode>& nodes() const { return nodes_; }
  const ConstNode& node(int i) const { return nodes_[i]; }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

  // Span of node i over token indices.
  std::pair<int, int> span(int i) const;
  // Every internal node's labeled span, preorder.
  std::vector<LabeledSpan> spans() const;
  // Empty when leaves cover [0, n) left to right once, spans are laminar,
  // and every internal node has children.
  std::optional<std::string> error() const;

  // "(S (NP a) (VP b))"
  std::string render() const;

  bool operator==(const ConstTree& other) const;

 private:
  std::vector<ConstNode> nodes_;
  std::vector<std::string> words_;
  int root_ = -1;
};

// A sentence with both annotations.
struct AnnotatedSentence {
  Sentence sentence;
  DepTree dep;
  ConstTree con;
};

struct ClassPayload {
  int label = 0;
};
struct PairPayload {
  AnnotatedSentence partner;
  int label = 0;
};
// Per-token BIO tags for the arguments of the predicate at `predicate`.
struct TagPayload {
  std::vector<std::string> tags;
  int predicate = 0;
};

enum class TaskKind { kClassify, kPair, kTag };
std::string_view task_name(TaskKind kind);
TaskKind parse_task(std::string_view name);

struct Example {
  AnnotatedSentence sentence;
  std::variant<ClassPayload, PairPayload, TagPayload> payload;

  TaskKind task() const;
};

// ---- Text formats ---------------------------------------------------------

// Whitespace-separated ID FORM HEAD DEPREL rows, blank-line separated.
std::vector<std::pair<Sentence, DepTree>> parse_conll_dep(std::string_view text);

// One or more PTB-style trees; error locations are character offsets.
std::vector<ConstTree> parse_bracketed(std::string_view text);
// Collapses runs of whitespace so that it equals render() of a parsed tree.
std::string canonical_brackets(std::string_view text);

// JSONL: one example per line with tokens, dep_heads, dep_labels, con_tree and
// exactly one payload (label | pair + label | tags + predicate).
std::vector<Example> parse_jsonl(std::string_view text);
std::string to_jsonl(const std::vector<Example>& examples);
std::vector<Example> load_jsonl(const std::string& path);
void save_jsonl(const std::vector<Example>& examples, const std::string& path);

// Both annotations agree with the tokens and satisfy their invariants.
void validate(const AnnotatedSentence& s, std::size_t line);
void validate(const Example& e, std::size_t line);

// ---- Vocabularies ---------------------------------------------------------

// Token vocabulary; ids 0/1/2 are PAD/UNK/MASK. Remaining ids are assigned by
// descending count, ties broken lexicographically.
class Vocab {
 public:
  static Vocab build(const std::map<std::string, std::size_t>& counts,
                     std::size_t min_count = 1);
  static Vocab from_tokens(std::vector<std::string> tokens);

  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  void encode(Sentence& s) const;

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

// Closed label inventory sorted lexicographically after optional reserved
// entries.
class LabelSet {
 public:
  static LabelSet build(std::vector<std::string> labels,
                        std::vector<std::string> reserved = {});
  int id(const std::string& label) const;  // throws on unknown labels
  int id_or(const std::string& label, int fallback) const;
  const std::string& label(int id) const { return labels_.at(id); }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  bool operator==(const LabelSet& o) const { return labels_ == o.labels_; }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, int> index_;
};

}  // namespace syndistill

#endif  // SYNDISTILL_SYNTAX_DATA_H_
