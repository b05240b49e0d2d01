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

#include "syndistill/models.h"

#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace syndistill {
namespace {

using nlohmann::json;

constexpr char kUnkLabel[] = "<unk>";

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

json label_json(const LabelSet& s) { return s.labels(); }

LabelSet label_from_json(const json& j) {
  auto all = j.get<std::vector<std::string>>();
  if (all.empty()) throw std::invalid_argument("empty label set in metadata");
  std::vector<std::string> rest(all.begin() + 1, all.end());
  LabelSet s = LabelSet::build(rest, {all.front()});
  if (s.labels() != all) throw std::invalid_argument("label set in metadata is not canonical");
  return s;
}

void count_tokens(const AnnotatedSentence& s, std::map<std::string, std::size_t>& counts) {
  for (const auto& t : s.sentence.tokens) ++counts[t];
}

T32 cat_rows(std::initializer_list<T32> parts) {
  return concat_rows<float>(std::span<const T32>(parts.begin(), parts.size()));
}

}  // namespace

// ---- Vocabularies ---------------------------------------------------------

Vocabularies Vocabularies::build(const std::vector<Example>& train, std::size_t min_count) {
  if (train.empty()) throw std::invalid_argument("cannot build vocabularies from no examples");
  Vocabularies v;
  v.task = train.front().task();
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> deps, spans, phrases, tags;
  int max_label = -1;
  auto visit = [&](const AnnotatedSentence& s) {
    count_tokens(s, counts);
    deps.insert(deps.end(), s.dep.labels.begin(), s.dep.labels.end());
    auto bl = binarized_labels(s.con);
    spans.insert(spans.end(), bl.begin(), bl.end());
    for (const auto& node : s.con.nodes())
      if (!node.is_word()) phrases.push_back(node.label);
  };
  for (const auto& e : train) {
    if (e.task() != v.task) throw std::invalid_argument("training examples mix task kinds");
    visit(e.sentence);
    if (const auto* c = std::get_if<ClassPayload>(&e.payload)) max_label = std::max(max_label, c->label);
    if (const auto* p = std::get_if<PairPayload>(&e.payload)) {
      visit(p->partner);
      max_label = std::max(max_label, p->label);
    }
    if (const auto* t = std::get_if<TagPayload>(&e.payload))
      tags.insert(tags.end(), t->tags.begin(), t->tags.end());
  }
  v.words = Vocab::build(counts, min_count);
  v.dep_labels = LabelSet::build(deps, {kUnkLabel});
  v.span_labels = LabelSet::build(spans, {kNullLabel});
  v.phrase_labels = LabelSet::build(phrases, {kUnkLabel});
  v.tags = LabelSet::build(tags, {kOutsideTag});
  v.classes = v.task == TaskKind::kTag ? 0 : static_cast<std::size_t>(std::max(max_label + 1, 2));
  return v;
}

std::string Vocabularies::to_json() const {
  json j;
  j["task"] = std::string(task_name(task));
  j["words"] = words.tokens();
  j["dep_labels"] = label_json(dep_labels);
  j["span_labels"] = label_json(span_labels);
  j["phrase_labels"] = label_json(phrase_labels);
  j["tags"] = label_json(tags);
  j["classes"] = classes;
  return j.dump();
}

Vocabularies Vocabularies::from_json(std::string_view text) {
  const json j = json::parse(text);
  Vocabularies v;
  v.task = parse_task(j.at("task").get<std::string>());
  v.words = Vocab::from_tokens(j.at("words").get<std::vector<std::string>>());
  v.dep_labels = label_from_json(j.at("dep_labels"));
  v.span_labels = label_from_json(j.at("span_labels"));
  v.phrase_labels = label_from_json(j.at("phrase_labels"));
  v.tags = label_from_json(j.at("tags"));
  v.classes = j.at("classes").get<std::size_t>();
  return v;
}

// ---- Encoding -------------------------------------------------------------

EncodedSentence encode_sentence(const AnnotatedSentence& s, const Vocabularies& v) {
  const std::size_t n = s.sentence.size();
  if (n == 0) throw std::invalid_argument("empty sentence");
  if (s.dep.size() != n) throw std::invalid_argument("sentence lacks a dependency tree");
  if (s.con.root() < 0 || s.con.size() != n)
    throw std::invalid_argument("sentence lacks a constituency tree");
  EncodedSentence e;
  Sentence copy = s.sentence;
  v.words.encode(copy);
  e.ids = copy.ids;
  e.dep = s.dep;
  for (const auto& l : s.dep.labels) e.dep_label_ids.push_back(v.dep_labels.id_or(l, 0));
  e.bin = binarize(s.con, v.span_labels);
  e.bin.normalize();
  e.dep_topo = dep_topology(s.dep);
  e.bin_topo = bin_topology(e.bin, &e.leaf_node);
  for (const auto& sp : e.bin.spans) e.bin_label_ids.push_back(sp.label);
  e.graph = con_graph(s.con);
  for (const auto& l : e.graph.labels) e.graph_label_ids.push_back(v.phrase_labels.id_or(l, 0));
  return e;
}

EncodedExample encode_example(const Example& ex, const Vocabularies& v) {
  if (ex.task() != v.task)
    throw std::invalid_argument("example task " + std::string(task_name(ex.task())) +
                                " does not match model task " + std::string(task_name(v.task)));
  EncodedExample e;
  e.sentence = encode_sentence(ex.sentence, v);
  if (const auto* c = std::get_if<ClassPayload>(&ex.payload)) {
    e.label = c->label;
  } else if (const auto* p = std::get_if<PairPayload>(&ex.payload)) {
    e.label = p->label;
    e.partner = encode_sentence(p->partner, v);
  } else {
    const auto& t = std::get<TagPayload>(ex.payload);
    for (const auto& tag : t.tags) e.tag_ids.push_back(v.tags.id_or(tag, 0));
    e.predicate = t.predicate;
  }
  if (v.task != TaskKind::kTag && (e.label < 0 || static_cast<std::size_t>(e.label) >= v.classes))
    throw std::invalid_argument("label " + std::to_string(e.label) + " outside " +
                                std::to_string(v.classes) + " classes");
  return e;
}

std::vector<EncodedExample> encode_all(const std::vector<Example>& data, const Vocabularies& v) {
  std::vector<EncodedExample> out;
  out.reserve(data.size());
  for (const auto& e : data) out.push_back(encode_example(e, v));
  return out;
}

// ---- Dims -----------------------------------------------------------------

void ModelDims::validate() const {
  auto positive = [](std::size_t x, const char* name) {
    if (x == 0) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(embed, "embed");
  positive(teacher_hidden, "teacher_hidden");
  positive(student_hidden, "student_hidden");
  positive(teacher_layers, "teacher_layers");
  positive(student_layers, "student_layers");
  positive(head_width, "head_width");
  positive(arc_dim, "arc_dim");
  positive(span_width, "span_width");
  positive(feature_dim, "feature_dim");
  positive(indicator_dim, "indicator_dim");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
}

std::string ModelDims::to_json() const {
  return json{{"embed", embed},
              {"teacher_hidden", teacher_hidden},
              {"student_hidden", student_hidden},
              {"teacher_layers", teacher_layers},
              {"student_layers", student_layers},
              {"head_width", head_width},
              {"arc_dim", arc_dim},
              {"span_width", span_width},
              {"feature_dim", feature_dim},
              {"indicator_dim", indicator_dim},
              {"dropout", dropout}}
      .dump();
}

ModelDims ModelDims::from_json(std::string_view text) {
  const json j = json::parse(text);
  ModelDims d;
  d.embed = j.at("embed");
  d.teacher_hidden = j.at("teacher_hidden");
  d.student_hidden = j.at("student_hidden");
  d.teacher_layers = j.at("teacher_layers");
  d.student_layers = j.at("student_layers");
  d.head_width = j.at("head_width");
  d.arc_dim = j.at("arc_dim");
  d.span_width = j.at("span_width");
  d.feature_dim = j.at("feature_dim");
  d.indicator_dim = j.at("indicator_dim");
  d.dropout = j.at("dropout");
  d.validate();
  return d;
}

// ---- Task head ------------------------------------------------------------

TaskHead TaskHead::create(ParamStore<float>& store, const std::string& name, TaskKind task,
                          std::size_t rep_dim, const ModelDims& dims, std::size_t outputs,
                          std::mt19937_64& rng) {
  TaskHead h;
  h.task = task;
  if (task == TaskKind::kTag) {
    h.tag = TagHead<float>::create(store, name + ".tag", rep_dim, dims.indicator_dim, outputs, rng);
  } else {
    const std::size_t in = task == TaskKind::kPair ? 5 * rep_dim : rep_dim;
    h.mlp = Mlp<float>::create(store, name + ".mlp", in, dims.head_width, outputs, rng);
  }
  return h;
}

T32 TaskHead::sentence(const T32& u, const T32& v) const {
  return mlp(task == TaskKind::kPair ? pair_features(u, v) : u);
}

T32 TaskHead::tokens(const T32& reps, int predicate) const { return tag(reps, predicate); }

// ---- Teachers -------------------------------------------------------------

std::string_view teacher_name(TeacherKind kind) {
  switch (kind) {
    case TeacherKind::kTreeLstmDep: return "treelstm-dep";
    case TeacherKind::kGcnDep: return "gcn-dep";
    case TeacherKind::kTreeLstmCon: return "treelstm-con";
    case TeacherKind::kGcnCon: return "gcn-con";
  }
  return "?";
}

TeacherKind parse_teacher(std::string_view name) {
  for (TeacherKind k : kAllTeachers)
    if (teacher_name(k) == name) return k;
  throw std::invalid_argument("unknown teacher '" + std::string(name) + "'");
}

Teacher::Teacher(TeacherKind kind, const Vocabularies& vocab, const ModelDims& dims,
                 bool structure_head, std::uint64_t seed)
    : kind_(kind), dims_(dims), structure_head_(structure_head) {
  dims.validate();
  auto rng = seeded(seed, static_cast<std::uint64_t>(kind) + 1);
  const std::string p(teacher_name(kind));
  const double emb = 0.1;
  words_ = store_.create(p + ".words", {vocab.words.size(), dims.embed}, emb, rng);
  const std::size_t H = dims.teacher_hidden;
  switch (kind) {
    case TeacherKind::kTreeLstmDep:
      tree_ = TreeLstm<float>(store_, p + ".tree", CellKind::kChildSum, dims.embed, H,
                              dims.teacher_layers, Direction::kBoth, rng);
      rep_dim_ = tree_.output_dim();
      break;
    case TeacherKind::kTreeLstmCon:
      labels_ = store_.create(p + ".labels", {vocab.span_labels.size(), dims.embed}, emb, rng);
      tree_ = TreeLstm<float>(store_, p + ".tree", CellKind::kNary, dims.embed, H,
                              dims.teacher_layers, Direction::kBoth, rng);
      rep_dim_ = tree_.output_dim();
      break;
    case TeacherKind::kGcnCon:
      labels_ = store_.create(p + ".labels", {vocab.phrase_labels.size(), dims.embed}, emb, rng);
      [[fallthrough]];
    case TeacherKind::kGcnDep:
      gcn_in_ = Linear<float>::create(store_, p + ".in", dims.embed, H, rng);
      gcn_ = Gcn<float>(store_, p + ".gcn", H, dims.teacher_layers, rng);
      rep_dim_ = H;
      break;
  }
  head_ = TaskHead::create(store_, p + ".task", vocab.task, rep_dim_, dims, vocab.outputs(), rng);
  if (structure_head_) {
    if (is_dependency(kind)) {
      arc_ = ArcScorer<float>::create(store_, p + ".arc", rep_dim_, dims.arc_dim,
                                      vocab.dep_labels.size(), rng);
    } else {
      span_ = SpanScorer<float>::create(store_, p + ".span", rep_dim_, dims.span_width,
                                        vocab.span_labels.size(), rng);
    }
  }
}

T32 Teacher::token_inputs(const EncodedSentence& s, bool training, std::mt19937_64& rng) const {
  return dropout(embedding<float>(words_, s.ids), dims_.dropout, training, rng);
}

Teacher::Reps Teacher::encode(const EncodedSentence& s, bool training,
                             std::mt19937_64& rng) const {
  const std::size_t n = s.size();
  const T32 words = token_inputs(s, training, rng);
  switch (kind_) {
    case TeacherKind::kTreeLstmDep: {
      const T32 out = tree_.encode(s.dep_topo, words);
      return {out, out};
    }
    case TeacherKind::kTreeLstmCon: {
      // Leaves add their word to their span label; internal nodes see only
      // the label.
      const T32 padded = cat_rows({words, T32::zeros({1, dims_.embed})});
      std::vector<std::size_t> word_row(s.bin_topo.size(), n);
      for (std::size_t t = 0; t < n; ++t) word_row[s.leaf_node[t]] = t;
      const T32 labels =
          dropout(embedding<float>(labels_, s.bin_label_ids), dims_.dropout, training, rng);
      const T32 x = add(gather_rows(padded, word_row), labels);
      const T32 out = tree_.encode(s.bin_topo, x);
      std::vector<std::size_t> leaves(s.leaf_node.begin(), s.leaf_node.end());
      const T32 tokens = gather_rows(out, leaves);
      return {tokens, tokens};
    }
    case TeacherKind::kGcnDep: {
      const T32 A = dep_adjacency<float>(s.dep);
      const T32 out = gcn_.encode(A, relu(gcn_in_(words)));
      return {out, out};
    }
    case TeacherKind::kGcnCon: {
      const std::size_t m = n + s.graph.labels.size();
      const T32 A = adjacency<float>(m, s.graph.edges, true);
      const T32 labels =
          dropout(embedding<float>(labels_, s.graph_label_ids), dims_.dropout, training, rng);
      const T32 H = gcn_.encode(A, relu(gcn_in_(cat_rows({words, labels}))));
      return {slice_rows(H, 0, n), H};
    }
  }
  throw std::logic_error("unreachable teacher kind");
}

T32 Teacher::task_logits(const EncodedExample& e, const Reps& reps, const Reps& partner) const {
  switch (head_.task) {
    case TaskKind::kClassify: return head_.sentence(mean_rows(reps.nodes), T32());
    case TaskKind::kPair: return head_.sentence(mean_rows(reps.nodes), mean_rows(partner.nodes));
    case TaskKind::kTag: return head_.tokens(reps.tokens, e.predicate);
  }
  throw std::logic_error("unreachable task kind");
}

T32 Teacher::logits(const EncodedExample& e, bool training, std::mt19937_64& rng) const {
  const Reps reps = encode(e.sentence, training, rng);
  Reps partner;
  if (e.partner) partner = encode(*e.partner, training, rng);
  return task_logits(e, reps, partner);
}

// ---- Student --------------------------------------------------------------

Student::Student(const Vocabularies& vocab, const ModelDims& dims, std::uint64_t seed)
    : dims_(dims),
      task_(vocab.task),
      vocab_size_(vocab.words.size()),
      outputs_(vocab.outputs()) {
  dims.validate();
  auto rng = seeded(seed, 0);
  words_ = store_.create("student.words", {vocab.words.size(), dims.embed}, 0.1, rng);
  lstm_ = BiLstm<float>(store_, "student.lstm", dims.embed, dims.student_hidden,
                        dims.student_layers, rng);
  const std::size_t R = lstm_.output_dim();
  head_ = TaskHead::create(store_, "student.task", vocab.task, R, dims, vocab.outputs(), rng);
  bos_ = store_.create("student.bos", {1, dims.student_hidden}, 0.1, rng);
  lm_ = Linear<float>::create(store_, "student.lm", dims.student_hidden, vocab.words.size(), rng);
  arc_ = ArcScorer<float>::create(store_, "student.arc", R, dims.arc_dim, vocab.dep_labels.size(),
                                  rng);
  span_ = SpanScorer<float>::create(store_, "student.span", R, dims.span_width,
                                    vocab.span_labels.size(), rng);
  proj_ = Linear<float>::create(store_, "student.proj", R, dims.feature_dim, rng);
}

SequenceReps<float> Student::encode(const std::vector<const std::vector<int>*>& sentences,
                                    bool training, std::mt19937_64& rng) const {
  std::vector<std::size_t> lengths;
  for (const auto* s : sentences) lengths.push_back(s->size());
  const BatchLayout layout = BatchLayout::of(lengths);
  std::vector<int> ids(layout.packed_rows(), kPadId);
  for (std::size_t b = 0; b < sentences.size(); ++b)
    for (std::size_t t = 0; t < lengths[b]; ++t) ids[layout.row(b, t)] = (*sentences[b])[t];
  const T32 x = dropout(embedding<float>(words_, ids), dims_.dropout, training, rng);
  return lstm_.encode(x, layout);
}

StudentPass Student::forward(const std::vector<const EncodedExample*>& batch, bool training,
                             std::mt19937_64& rng,
                             const std::vector<std::vector<int>>* masked) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (masked && masked->size() != batch.size())
    throw std::invalid_argument("masked ids do not match the batch");
  std::vector<const std::vector<int>*> sentences;
  for (std::size_t b = 0; b < batch.size(); ++b)
    sentences.push_back(masked ? &(*masked)[b] : &batch[b]->sentence.ids);
  if (task_ == TaskKind::kPair) {
    for (const auto* e : batch) {
      if (!e->partner) throw std::invalid_argument("pair example without a partner");
      sentences.push_back(&e->partner->ids);
    }
  }
  StudentPass out{encode(sentences, training, rng), T32()};
  const std::size_t B = batch.size();
  switch (task_) {
    case TaskKind::kClassify:
      out.logits = head_.sentence(mean_pool(out.reps.packed, out.reps.layout), T32());
      break;
    case TaskKind::kPair: {
      const T32 pooled = mean_pool(out.reps.packed, out.reps.layout);
      out.logits = head_.sentence(slice_rows(pooled, 0, B), slice_rows(pooled, B, 2 * B));
      break;
    }
    case TaskKind::kTag: {
      std::vector<T32> parts;
      for (std::size_t b = 0; b < B; ++b)
        parts.push_back(head_.tokens(sentence_reps(out.reps, b), batch[b]->predicate));
      out.logits = concat_rows<float>(parts);
      break;
    }
  }
  return out;
}

T32 Student::sentence_reps(const SequenceReps<float>& reps, std::size_t b) {
  return gather_rows(reps.packed, reps.layout.rows(b));
}

T32 Student::lm_logits(const SequenceReps<float>& reps, std::size_t b,
                       std::span<const int> positions) const {
  const std::size_t n = reps.layout.lengths.at(b);
  std::vector<std::size_t> prev;
  for (std::size_t t = 0; t + 1 < n; ++t) prev.push_back(reps.layout.row(b, t));
  const T32 states = prev.empty() ? bos_ : cat_rows({bos_, gather_rows(reps.top_forward, prev)});
  std::vector<std::size_t> pick;
  for (int j : positions) {
    if (j < 0 || static_cast<std::size_t>(j) >= n)
      throw std::invalid_argument("lm position out of range");
    pick.push_back(static_cast<std::size_t>(j));
  }
  return lm_(gather_rows(states, pick));
}

T32 teacher_projection(std::size_t rep_dim, std::size_t feature_dim, std::uint64_t seed) {
  auto rng = seeded(seed, 0x7f7f);
  const double bound = ParamStore<float>::glorot(rep_dim, feature_dim);
  std::vector<float> w(rep_dim * feature_dim);
  for (auto& x : w) x = static_cast<float>((2.0 * uniform01(rng) - 1.0) * bound);
  return T32::from({rep_dim, feature_dim}, std::move(w));
}

}  // namespace syndistill
