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

#include "syndistill/syntax_data.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace syndistill {

using json = nlohmann::json;

// ---- Dependency trees -----------------------------------------------------

std::optional<std::string> dep_tree_error(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  if (n == 0) return "empty sentence";
  for (int i = 0; i < n; ++i) {
    if (heads[i] < 0 || heads[i] > n) {
      return "head " + std::to_string(heads[i]) + " of token " +
             std::to_string(i + 1) + " out of range";
    }
  }
  for (int i = 1; i <= n; ++i) {
    int cur = i;
    for (int steps = 0; cur != 0; ++steps) {
      if (steps > n) return "cycle at token " + std::to_string(i);
      cur = heads[cur - 1];
    }
  }
  const auto roots = std::count(heads.begin(), heads.end(), 0);
  if (roots != 1) return std::to_string(roots) + " tokens attach to the root";
  return std::nullopt;
}

std::vector<std::vector<int>> dep_children(const DepTree& tree) {
  std::vector<std::vector<int>> children(tree.size() + 1);
  for (std::size_t i = 0; i < tree.size(); ++i)
    children[tree.heads[i]].push_back(static_cast<int>(i) + 1);
  return children;
}

// ---- Constituency trees ---------------------------------------------------

int ConstTree::add_word(std::string word) {
  ConstNode node;
  node.token = static_cast<int>(words_.size());
  words_.push_back(std::move(word));
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

int ConstTree::add_node(std::string label, std::vector<int> children) {
  ConstNode node;
  node.label = std::move(label);
  node.children = std::move(children);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

namespace {

void collect_spans(const ConstTree& t, int i, std::vector<std::pair<int, int>>& out) {
  const ConstNode& node = t.node(i);
  if (node.is_word()) {
    out[i] = {node.token, node.token + 1};
    return;
  }
  int lo = -1, hi = -1;
  for (int c : node.children) {
    collect_spans(t, c, out);
    if (lo < 0 || out[c].first < lo) lo = out[c].first;
    hi = std::max(hi, out[c].second);
  }
  out[i] = {lo, hi};
}

void render_node(const ConstTree& t, int i, std::string& out) {
  const ConstNode& node = t.node(i);
  if (node.is_word()) {
    out += t.words()[node.token];
    return;
  }
  out += '(';
  out += node.label;
  for (int c : node.children) {
    out += ' ';
    render_node(t, c, out);
  }
  out += ')';
}

}  // namespace

std::pair<int, int> ConstTree::span(int i) const {
  std::vector<std::pair<int, int>> all(nodes_.size(), {-1, -1});
  collect_spans(*this, i, all);
  return all[i];
}

std::vector<LabeledSpan> ConstTree::spans() const {
  std::vector<std::pair<int, int>> all(nodes_.size(), {-1, -1});
  collect_spans(*this, root_, all);
  std::vector<LabeledSpan> out;
  std::vector<int> stack = {root_};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const ConstNode& node = nodes_[i];
    if (node.is_word()) continue;
    out.push_back({all[i].first, all[i].second, node.label});
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it)
      stack.push_back(*it);
  }
  return out;
}

std::optional<std::string> ConstTree::error() const {
  if (root_ < 0 || root_ >= static_cast<int>(nodes_.size())) return "tree has no root";
  if (nodes_[root_].is_word()) return "root is a bare word";
  std::vector<int> visits(nodes_.size(), 0);
  int next_token = 0;
  // Iterative preorder; verifies leaf order and child adjacency.
  std::vector<std::pair<int, int>> spans(nodes_.size(), {-1, -1});
  std::vector<std::pair<int, std::size_t>> stack = {{root_, 0}};
  if (++visits[root_] > 1) return "node reached twice";
  while (!stack.empty()) {
    auto& [i, k] = stack.back();
    const ConstNode& node = nodes_[i];
    if (node.is_word()) {
      if (node.token != next_token) return "leaves out of order at token " + std::to_string(next_token);
      spans[i] = {next_token, next_token + 1};
      ++next_token;
      stack.pop_back();
      continue;
    }
    if (node.children.empty()) return "empty node " + node.label;
    if (k < node.children.size()) {
      const int c = node.children[k++];
      if (c < 0 || c >= static_cast<int>(nodes_.size())) return "dangling child index";
      if (++visits[c] > 1) return "node reached twice";
      stack.emplace_back(c, 0);
      continue;
    }
    spans[i] = {spans[node.children.front()].first, spans[node.children.back()].second};
    for (std::size_t c = 0; c + 1 < node.children.size(); ++c) {
      if (spans[node.children[c]].second != spans[node.children[c + 1]].first) {
        return "crossing spans under " + node.label;
      }
    }
    stack.pop_back();
  }
  if (next_token != static_cast<int>(words_.size())) return "leaves do not cover the sentence";
  return std::nullopt;
}

std::string ConstTree::render() const {
  std::string out;
  if (root_ >= 0) render_node(*this, root_, out);
  return out;
}

bool ConstTree::operator==(const ConstTree& other) const {
  return words_ == other.words_ && render() == other.render();
}

// ---- Bracketed text -------------------------------------------------------

namespace {

class BracketParser {
 public:
  explicit BracketParser(std::string_view text) : text_(text) {}

  std::vector<ConstTree> parse_all() {
    std::vector<ConstTree> trees;
    skip_space();
    while (pos_ < text_.size()) {
      if (text_[pos_] != '(') fail("expected '('", pos_);
      ConstTree tree;
      const int root = parse_node(tree, /*allow_unlabeled=*/true);
      if (tree.node(root).is_word()) fail("top-level bare word", pos_);
      tree.set_root(root);
      trees.push_back(std::move(tree));
      skip_space();
    }
    return trees;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw DataError("offset " + std::to_string(at) + ": " + what, at);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string read_atom() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')') {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  // pos_ at '('. Returns the index of the parsed node.
  int parse_node(ConstTree& tree, bool allow_unlabeled) {
    const std::size_t open = pos_++;
    skip_space();
    if (pos_ >= text_.size()) fail("unbalanced parentheses", text_.size());
    std::string label;
    if (text_[pos_] != '(' && text_[pos_] != ')') label = read_atom();
    std::vector<int> children;
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) fail("unbalanced parentheses", text_.size());
      const char c = text_[pos_];
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        children.push_back(parse_node(tree, false));
      } else {
        children.push_back(tree.add_word(read_atom()));
      }
    }
    if (children.empty()) fail("empty node", open);
    if (label.empty()) {
      // PTB wrapper "( (S ...) )": only a single subtree may be unlabeled.
      if (!allow_unlabeled || children.size() != 1 || tree.node(children[0]).is_word()) {
        fail("empty node", open);
      }
      return children[0];
    }
    return tree.add_node(std::move(label), std::move(children));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<ConstTree> parse_bracketed(std::string_view text) {
  return BracketParser(text).parse_all();
}

std::string canonical_brackets(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty() && out.back() != '(' && c != ')') out += ' ';
    pending_space = false;
    if (c == '(' && !out.empty() && out.back() != '(' && out.back() != ' ') out += ' ';
    out += c;
  }
  return out;
}

// ---- CoNLL ----------------------------------------------------------------

std::vector<std::pair<Sentence, DepTree>> parse_conll_dep(std::string_view text) {
  std::vector<std::pair<Sentence, DepTree>> out;
  Sentence sent;
  DepTree tree;
  std::size_t block_line = 0;
  auto flush = [&] {
    if (sent.tokens.empty()) return;
    if (auto err = dep_tree_error(tree.heads)) {
      throw DataError("line " + std::to_string(block_line) + ": " + *err, block_line);
    }
    out.emplace_back(std::move(sent), std::move(tree));
    sent = Sentence{};
    tree = DepTree{};
  };
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    std::istringstream cols(line);
    std::vector<std::string> fields;
    for (std::string f; cols >> f;) fields.push_back(f);
    if (fields.empty()) {
      flush();
      if (end == text.size()) break;
      continue;
    }
    if (fields[0].starts_with('#')) continue;
    if (fields.size() != 4) {
      throw DataError("line " + std::to_string(line_no) + ": expected 4 columns, got " +
                          std::to_string(fields.size()),
                      line_no);
    }
    if (sent.tokens.empty()) block_line = line_no;
    int id = 0, head = 0;
    try {
      id = std::stoi(fields[0]);
      head = std::stoi(fields[2]);
    } catch (const std::exception&) {
      throw DataError("line " + std::to_string(line_no) + ": non-numeric ID or HEAD", line_no);
    }
    if (id != static_cast<int>(sent.tokens.size()) + 1) {
      throw DataError("line " + std::to_string(line_no) + ": expected ID " +
                          std::to_string(sent.tokens.size() + 1),
                      line_no);
    }
    sent.tokens.push_back(fields[1]);
    tree.heads.push_back(head);
    tree.labels.push_back(fields[3]);
    if (end == text.size()) {
      flush();
      break;
    }
  }
  flush();
  return out;
}

// ---- Validation -----------------------------------------------------------

namespace {

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what, line);
}

}  // namespace

void validate(const AnnotatedSentence& s, std::size_t line) {
  const std::size_t n = s.sentence.size();
  if (n == 0) line_error(line, "empty sentence");
  if (s.dep.heads.size() != n) {
    line_error(line, "dep_heads has " + std::to_string(s.dep.heads.size()) +
                         " entries for " + std::to_string(n) + " tokens");
  }
  if (s.dep.labels.size() != n) {
    line_error(line, "dep_labels has " + std::to_string(s.dep.labels.size()) +
                         " entries for " + std::to_string(n) + " tokens");
  }
  if (auto err = dep_tree_error(s.dep.heads)) line_error(line, *err);
  if (auto err = s.con.error()) line_error(line, "con_tree: " + *err);
  if (s.con.words() != s.sentence.tokens) line_error(line, "con_tree leaves differ from tokens");
}

void validate(const Example& e, std::size_t line) {
  validate(e.sentence, line);
  const std::size_t n = e.sentence.sentence.size();
  if (const auto* pair = std::get_if<PairPayload>(&e.payload)) validate(pair->partner, line);
  if (const auto* tag = std::get_if<TagPayload>(&e.payload)) {
    if (tag->tags.size() != n) {
      line_error(line, "tags has " + std::to_string(tag->tags.size()) + " entries for " +
                           std::to_string(n) + " tokens");
    }
    if (tag->predicate < 0 || tag->predicate >= static_cast<int>(n)) {
      line_error(line, "predicate index out of range");
    }
  }
}

std::string_view task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kClassify: return "classify";
    case TaskKind::kPair: return "pair";
    case TaskKind::kTag: return "tag";
  }
  return "classify";
}

TaskKind parse_task(std::string_view name) {
  if (name == "classify") return TaskKind::kClassify;
  if (name == "pair") return TaskKind::kPair;
  if (name == "tag") return TaskKind::kTag;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

TaskKind Example::task() const {
  if (std::holds_alternative<PairPayload>(payload)) return TaskKind::kPair;
  if (std::holds_alternative<TagPayload>(payload)) return TaskKind::kTag;
  return TaskKind::kClassify;
}

// ---- JSONL ----------------------------------------------------------------

namespace {

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) line_error(line, std::string("missing field '") + key + "'");
  return *it;
}

AnnotatedSentence sentence_from_json(const json& obj, std::size_t line) {
  AnnotatedSentence s;
  std::string con_text;
  try {
    s.sentence.tokens = require(obj, "tokens", line).get<std::vector<std::string>>();
    s.dep.heads = require(obj, "dep_heads", line).get<std::vector<int>>();
    s.dep.labels = require(obj, "dep_labels", line).get<std::vector<std::string>>();
    con_text = require(obj, "con_tree", line).get<std::string>();
  } catch (const json::exception& e) {
    line_error(line, std::string("bad field type: ") + e.what());
  }
  std::vector<ConstTree> trees;
  try {
    trees = parse_bracketed(con_text);
  } catch (const DataError& e) {
    line_error(line, std::string("con_tree: ") + e.what());
  }
  if (trees.size() != 1) line_error(line, "con_tree must hold exactly one tree");
  s.con = std::move(trees[0]);
  return s;
}

json sentence_to_json(const AnnotatedSentence& s) {
  json obj;
  obj["tokens"] = s.sentence.tokens;
  obj["dep_heads"] = s.dep.heads;
  obj["dep_labels"] = s.dep.labels;
  obj["con_tree"] = s.con.render();
  return obj;
}

}  // namespace

std::vector<Example> parse_jsonl(std::string_view text) {
  std::vector<Example> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) line_error(line_no, "expected a JSON object");
    Example ex;
    ex.sentence = sentence_from_json(obj, line_no);
    const bool has_label = obj.contains("label");
    const bool has_pair = obj.contains("pair");
    const bool has_tags = obj.contains("tags");
    try {
      if (has_tags && !has_label && !has_pair) {
        TagPayload tag;
        tag.tags = obj["tags"].get<std::vector<std::string>>();
        tag.predicate = require(obj, "predicate", line_no).get<int>();
        ex.payload = std::move(tag);
      } else if (has_pair && has_label && !has_tags) {
        PairPayload pair;
        pair.partner = sentence_from_json(obj["pair"], line_no);
        pair.label = obj["label"].get<int>();
        ex.payload = std::move(pair);
      } else if (has_label && !has_pair && !has_tags) {
        ex.payload = ClassPayload{obj["label"].get<int>()};
      } else {
        line_error(line_no, "expected exactly one payload: label | pair+label | tags+predicate");
      }
    } catch (const json::exception& e) {
      line_error(line_no, std::string("bad payload: ") + e.what());
    }
    validate(ex, line_no);
    out.push_back(std::move(ex));
  }
  return out;
}

std::string to_jsonl(const std::vector<Example>& examples) {
  std::string out;
  for (const Example& ex : examples) {
    json obj = sentence_to_json(ex.sentence);
    std::visit(
        [&obj](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, ClassPayload>) {
            obj["label"] = p.label;
          } else if constexpr (std::is_same_v<P, PairPayload>) {
            obj["pair"] = sentence_to_json(p.partner);
            obj["label"] = p.label;
          } else {
            obj["tags"] = p.tags;
            obj["predicate"] = p.predicate;
          }
        },
        ex.payload);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<Example> load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str());
}

void save_jsonl(const std::vector<Example>& examples, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << to_jsonl(examples);
}

// ---- Vocabularies ---------------------------------------------------------

Vocab Vocab::build(const std::map<std::string, std::size_t>& counts,
                   std::size_t min_count) {
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (const auto& [tok, c] : counts) {
    if (c >= min_count && tok != kPadToken && tok != kUnkToken && tok != kMaskToken) {
      ranked.emplace_back(c, tok);
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> tokens = {kPadToken, kUnkToken, kMaskToken};
  for (auto& [_, tok] : ranked) tokens.push_back(tok);
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 3 || tokens[kPadId] != kPadToken || tokens[kUnkId] != kUnkToken ||
      tokens[kMaskId] != kMaskToken) {
    throw std::invalid_argument("vocabulary must start with <pad> <unk> <mask>");
  }
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary entry " + v.tokens_[i]);
    }
  }
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

void Vocab::encode(Sentence& s) const {
  s.ids.clear();
  for (const auto& t : s.tokens) s.ids.push_back(id(t));
}

LabelSet LabelSet::build(std::vector<std::string> labels, std::vector<std::string> reserved) {
  std::set<std::string> uniq(labels.begin(), labels.end());
  for (const auto& r : reserved) uniq.erase(r);
  LabelSet set;
  set.labels_ = std::move(reserved);
  set.labels_.insert(set.labels_.end(), uniq.begin(), uniq.end());
  for (std::size_t i = 0; i < set.labels_.size(); ++i)
    set.index_.emplace(set.labels_[i], static_cast<int>(i));
  return set;
}

int LabelSet::id(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw std::out_of_range("unknown label '" + label + "'");
  return it->second;
}

int LabelSet::id_or(const std::string& label, int fallback) const {
  auto it = index_.find(label);
  return it == index_.end() ? fallback : it->second;
}

}  // namespace syndistill
