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

#include "syndistill/synthetic.h"

#include <map>
#include <random>
#include <stdexcept>

namespace syndistill {

Lexicon Lexicon::with_size(int size) {
  static const std::pair<const char*, const char*> kNouns[] = {
      {"dog", "dogs"}, {"cat", "cats"},   {"bird", "birds"},       {"man", "men"},
      {"girl", "girls"}, {"farmer", "farmers"}, {"child", "children"}, {"horse", "horses"}};
  static const std::pair<const char*, const char*> kTransitive[] = {
      {"chases", "chase"}, {"sees", "see"},   {"likes", "like"},
      {"feeds", "feed"},   {"helps", "help"}, {"finds", "find"}};
  static const std::pair<const char*, const char*> kIntransitive[] = {
      {"runs", "run"}, {"sleeps", "sleep"}, {"sings", "sing"}, {"waits", "wait"}, {"falls", "fall"}};
  static const char* kAdjectives[] = {"small", "old", "happy", "big", "red"};
  static const char* kPrepositions[] = {"near", "with", "behind", "beside"};

  Lexicon lex;
  if (size <= 0) return lex;
  auto fill_pairs = [size](auto& out, const auto& builtin, const std::string& stem,
                           const std::string& sg, const std::string& pl) {
    const int have = static_cast<int>(std::size(builtin));
    for (int i = 0; i < size; ++i) {
      if (i < have) {
        out.emplace_back(builtin[i].first, builtin[i].second);
      } else {
        const std::string base = stem + std::to_string(i);
        out.emplace_back(base + sg, base + pl);
      }
    }
  };
  fill_pairs(lex.nouns, kNouns, "noun", "", "s");
  fill_pairs(lex.transitive, kTransitive, "tverb", "s", "");
  fill_pairs(lex.intransitive, kIntransitive, "iverb", "s", "");
  auto fill = [size](auto& out, const auto& builtin, const std::string& stem) {
    const int have = static_cast<int>(std::size(builtin));
    for (int i = 0; i < size; ++i) out.push_back(i < have ? builtin[i] : stem + std::to_string(i));
  };
  fill(lex.adjectives, kAdjectives, "adj");
  fill(lex.prepositions, kPrepositions, "prep");
  return lex;
}

namespace {

class Generator {
 public:
  Generator(const SyntheticConfig& cfg, const Lexicon& lex, std::mt19937_64& rng)
      : cfg_(cfg), lex_(lex), rng_(rng) {}

  // Sentence whose main verb agrees with its subject iff `agree`.
  ConstTree sentence(bool agree) {
    tree_ = ConstTree();
    const bool subject_plural = coin(0.5);
    const int subject = noun_phrase(0, subject_plural);
    const int predicate = verb_phrase(0, agree ? subject_plural : !subject_plural);
    tree_.set_root(tree_.add_node("S", {subject, predicate}));
    return std::move(tree_);
  }

 private:
  bool coin(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }
  std::size_t pick(std::size_t k) { return static_cast<std::size_t>(rng_() % k); }

  int preterminal(const std::string& tag, const std::string& word) {
    return tree_.add_node(tag, {tree_.add_word(word)});
  }

  int noun_phrase(int depth, bool plural) {
    std::vector<int> kids = {preterminal("DT", "the")};
    if (!lex_.adjectives.empty() && coin(cfg_.adj_prob)) {
      kids.push_back(preterminal("JJ", lex_.adjectives[pick(lex_.adjectives.size())]));
    }
    const auto& noun = lex_.nouns[pick(lex_.nouns.size())];
    kids.push_back(preterminal(plural ? "NNS" : "NN", plural ? noun.second : noun.first));
    if (depth < 2) {
      if (!lex_.prepositions.empty() && coin(cfg_.pp_prob)) {
        const int prep =
            preterminal("IN", lex_.prepositions[pick(lex_.prepositions.size())]);
        kids.push_back(tree_.add_node("PP", {prep, noun_phrase(depth + 1, coin(0.5))}));
      } else if (coin(cfg_.rc_prob)) {
        kids.push_back(relative_clause(depth, plural));
      }
    }
    return tree_.add_node("NP", std::move(kids));
  }

  int relative_clause(int depth, bool head_plural) {
    const int that = preterminal("WDT", "that");
    int clause;
    if (!lex_.transitive.empty() && coin(0.5)) {
      const bool plural = coin(0.5);
      const int subject = noun_phrase(depth + 1, plural);
      clause = tree_.add_node("S", {subject, tree_.add_node("VP", {verb(true, plural)})});
    } else {
      clause = tree_.add_node("S", {verb_phrase(depth + 1, head_plural)});
    }
    return tree_.add_node("SBAR", {that, clause});
  }

  int verb(bool transitive, bool plural) {
    const auto& pool = transitive ? lex_.transitive : lex_.intransitive;
    const auto& v = pool[pick(pool.size())];
    return preterminal(plural ? "VBP" : "VBZ", plural ? v.second : v.first);
  }

  int verb_phrase(int depth, bool plural) {
    const bool transitive = lex_.intransitive.empty() ||
                            (!lex_.transitive.empty() && coin(cfg_.transitive_prob));
    std::vector<int> kids = {verb(transitive, plural)};
    if (transitive) kids.push_back(noun_phrase(depth + 1, coin(0.5)));
    return tree_.add_node("VP", std::move(kids));
  }

  const SyntheticConfig& cfg_;
  const Lexicon& lex_;
  std::mt19937_64& rng_;
  ConstTree tree_;
};

AnnotatedSentence annotate(ConstTree tree) {
  AnnotatedSentence s;
  s.sentence.tokens = tree.words();
  s.dep = percolate_heads(tree);
  s.con = std::move(tree);
  return s;
}

// Preterminal tag of every token ("" for bare words).
std::vector<std::string> token_tags(const ConstTree& tree) {
  std::vector<std::string> tags(tree.size());
  for (const ConstNode& node : tree.nodes()) {
    if (!node.is_word() && node.children.size() == 1 && tree.node(node.children[0]).is_word()) {
      tags[tree.node(node.children[0]).token] = node.label;
    }
  }
  return tags;
}

int head_child(const ConstTree& tree, int i) {
  static const std::map<std::string, std::vector<std::string>> kRules = {
      {"S", {"VP", "S"}},         {"VP", {"VBZ", "VBP", "VB", "VBD", "VP"}},
      {"NP", {"NN", "NNS", "NP"}}, {"PP", {"IN"}},
      {"SBAR", {"S"}},            {"WHNP", {"WDT"}}};
  const ConstNode& node = tree.node(i);
  auto it = kRules.find(node.label);
  if (it != kRules.end()) {
    for (const std::string& want : it->second) {
      for (int c : node.children) {
        if (tree.node(c).label == want) return c;
      }
    }
  }
  return node.children.front();
}

std::string relation(const std::string& parent, const std::string& child) {
  static const std::map<std::pair<std::string, std::string>, std::string> kRelations = {
      {{"S", "NP"}, "nsubj"},   {{"VP", "NP"}, "dobj"},  {{"NP", "DT"}, "det"},
      {{"NP", "JJ"}, "amod"},   {{"NP", "PP"}, "prep"},  {{"PP", "NP"}, "pobj"},
      {{"NP", "SBAR"}, "relcl"}, {{"SBAR", "WDT"}, "mark"}};
  auto it = kRelations.find({parent, child});
  return it == kRelations.end() ? "dep" : it->second;
}

int head_token(const ConstTree& tree, int i, std::vector<int>& heads,
               std::vector<std::string>& labels) {
  const ConstNode& node = tree.node(i);
  if (node.is_word()) return node.token;
  const int hc = head_child(tree, i);
  const int head = head_token(tree, hc, heads, labels);
  for (int c : node.children) {
    if (c == hc) continue;
    const int dep = head_token(tree, c, heads, labels);
    heads[dep] = head + 1;
    labels[dep] = relation(node.label, tree.node(c).label);
  }
  return head;
}

struct Clause {
  int subject = -1;  // NP node
  int verb_phrase = -1;
};

Clause main_clause(const ConstTree& tree) {
  const ConstNode& root = tree.node(tree.root());
  Clause c;
  for (int k : root.children) {
    if (tree.node(k).label == "NP" && c.subject < 0) c.subject = k;
    if (tree.node(k).label == "VP") c.verb_phrase = k;
  }
  if (root.label != "S" || c.subject < 0 || c.verb_phrase < 0) {
    throw std::invalid_argument("tree has no S -> NP VP main clause: " + tree.render());
  }
  return c;
}

int node_head(const ConstTree& tree, int i) {
  while (!tree.node(i).is_word()) i = head_child(tree, i);
  return tree.node(i).token;
}

}  // namespace

DepTree percolate_heads(const ConstTree& tree) {
  if (auto err = tree.error()) throw std::invalid_argument("percolate_heads: " + *err);
  DepTree dep;
  dep.heads.assign(tree.size(), 0);
  dep.labels.assign(tree.size(), "root");
  head_token(tree, tree.root(), dep.heads, dep.labels);
  return dep;
}

int agreement_label(const ConstTree& tree) {
  const Clause c = main_clause(tree);
  const auto tags = token_tags(tree);
  const bool subject_plural = tags[node_head(tree, c.subject)] == "NNS";
  const bool verb_plural = tags[node_head(tree, c.verb_phrase)] == "VBP";
  return subject_plural == verb_plural ? 1 : 0;
}

TagPayload predicate_tags(const ConstTree& tree) {
  const Clause c = main_clause(tree);
  TagPayload out;
  out.tags.assign(tree.size(), "O");
  auto mark = [&](int node, const std::string& role) {
    const auto [b, e] = tree.span(node);
    for (int t = b; t < e; ++t) out.tags[t] = (t == b ? "B-" : "I-") + role;
  };
  mark(c.subject, "A0");
  for (int k : tree.node(c.verb_phrase).children) {
    if (tree.node(k).label == "NP") mark(k, "A1");
  }
  out.predicate = node_head(tree, c.verb_phrase);
  out.tags[out.predicate] = "B-V";
  return out;
}

std::vector<Example> gen_synthetic(const SyntheticConfig& config) {
  if (config.grammar_size <= 0) {
    throw DataError("degenerate grammar: grammar_size must be positive", 0);
  }
  return gen_synthetic(config, Lexicon::with_size(config.grammar_size));
}

std::vector<Example> gen_synthetic(const SyntheticConfig& config, const Lexicon& lexicon) {
  if (lexicon.nouns.empty() || (lexicon.transitive.empty() && lexicon.intransitive.empty())) {
    throw DataError("degenerate grammar: no noun or verb terminals", 0);
  }
  if (config.max_len < 3 || config.max_len > 20) {
    throw std::invalid_argument("max_len must lie in [3, 20]");
  }
  for (double p : {config.adj_prob, config.pp_prob, config.rc_prob, config.transitive_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probabilities must lie in [0, 1]");
  }
  std::mt19937_64 rng(config.seed);
  Generator gen(config, lexicon, rng);
  auto draw = [&](bool agree) {
    while (true) {
      ConstTree t = gen.sentence(agree);
      if (static_cast<int>(t.size()) <= config.max_len) return t;
    }
  };
  auto coin = [&rng]() { return (rng() >> 63) != 0; };

  std::vector<Example> out;
  out.reserve(config.n_examples);
  // Rejection keeps the two classes within one example of each other.
  const std::size_t per_class = (config.n_examples + 1) / 2;
  std::size_t counts[2] = {0, 0};
  while (out.size() < config.n_examples) {
    Example ex;
    int label = 0;
    switch (config.task) {
      case TaskKind::kClassify: {
        ex.sentence = annotate(draw(coin()));
        label = agreement_label(ex.sentence.con);
        ex.payload = ClassPayload{label};
        break;
      }
      case TaskKind::kPair: {
        ex.sentence = annotate(draw(coin()));
        PairPayload pair;
        pair.partner = annotate(draw(coin()));
        label = agreement_label(ex.sentence.con) == agreement_label(pair.partner.con) ? 1 : 0;
        pair.label = label;
        ex.payload = std::move(pair);
        break;
      }
      case TaskKind::kTag: {
        ex.sentence = annotate(draw(coin()));
        ex.payload = predicate_tags(ex.sentence.con);
        out.push_back(std::move(ex));
        continue;
      }
    }
    if (counts[label] >= per_class) continue;
    ++counts[label];
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace syndistill
