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

// Model assembly: corpus encoding against shared vocabularies, the four
// tree-encoder teachers, and the sequential student with its task,
// language-model and structure heads. All models run in f32.

#ifndef SYNDISTILL_MODELS_H_
#define SYNDISTILL_MODELS_H_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "syndistill/encoders.h"
#include "syndistill/params.h"
#include "syndistill/structures.h"
#include "syndistill/syntax_data.h"
#include "syndistill/tensor.h"

namespace syndistill {

using T32 = Tensor<float>;

inline constexpr char kOutsideTag[] = "O";

// Every label inventory a model needs, fixed from the training split.
struct Vocabularies {
  TaskKind task = TaskKind::kClassify;
  Vocab words;
  LabelSet dep_labels;     // "<unk>" first
  LabelSet span_labels;    // null label first, collapsed chains included
  LabelSet phrase_labels;  // raw internal-node labels, "<unk>" first
  LabelSet tags;           // "O" first; tagging task only
  std::size_t classes = 0;

  static Vocabularies build(const std::vector<Example>& train, std::size_t min_count = 1);
  std::size_t outputs() const { return task == TaskKind::kTag ? tags.size() : classes; }

  std::string to_json() const;
  static Vocabularies from_json(std::string_view text);
  bool operator==(const Vocabularies&) const = default;
};

struct EncodedSentence {
  std::vector<int> ids;
  DepTree dep;
  std::vector<int> dep_label_ids;
  BinTree bin;
  Topology dep_topo;
  Topology bin_topo;
  std::vector<int> leaf_node;   // token -> node of bin_topo
  std::vector<int> bin_label_ids;  // per bin_topo node
  ConGraph graph;
  std::vector<int> graph_label_ids;  // per internal graph node
  std::size_t size() const { return ids.size(); }
};

struct EncodedExample {
  EncodedSentence sentence;
  std::optional<EncodedSentence> partner;
  int label = 0;               // classify / pair
  std::vector<int> tag_ids;    // tag
  int predicate = 0;
};

EncodedSentence encode_sentence(const AnnotatedSentence& s, const Vocabularies& v);
EncodedExample encode_example(const Example& e, const Vocabularies& v);
std::vector<EncodedExample> encode_all(const std::vector<Example>& data, const Vocabularies& v);

struct ModelDims {
  std::size_t embed = 300;
  std::size_t teacher_hidden = 300;
  std::size_t student_hidden = 350;
  std::size_t teacher_layers = 2;
  std::size_t student_layers = 3;
  std::size_t head_width = 300;
  std::size_t arc_dim = 300;
  std::size_t span_width = 300;
  std::size_t feature_dim = 300;  // f_s / f_t output
  std::size_t indicator_dim = 16;
  double dropout = 0.4;

  void validate() const;
  std::string to_json() const;
  static ModelDims from_json(std::string_view text);
  bool operator==(const ModelDims&) const = default;
};

// Maps pooled or per-token representations to task logits.
struct TaskHead {
  TaskKind task = TaskKind::kClassify;
  Mlp<float> mlp;
  TagHead<float> tag;

  static TaskHead create(ParamStore<float>& store, const std::string& name, TaskKind task,
                         std::size_t rep_dim, const ModelDims& dims, std::size_t outputs,
                         std::mt19937_64& rng);
  // [1, classes] from sentence vectors; v is ignored unless task == kPair.
  T32 sentence(const T32& u, const T32& v) const;
  // [n, tags].
  T32 tokens(const T32& reps, int predicate) const;
};

enum class TeacherKind { kTreeLstmDep, kGcnDep, kTreeLstmCon, kGcnCon };
inline constexpr TeacherKind kAllTeachers[] = {TeacherKind::kTreeLstmDep, TeacherKind::kGcnDep,
                                               TeacherKind::kTreeLstmCon, TeacherKind::kGcnCon};
std::string_view teacher_name(TeacherKind kind);
TeacherKind parse_teacher(std::string_view name);
inline bool is_dependency(TeacherKind k) {
  return k == TeacherKind::kTreeLstmDep || k == TeacherKind::kGcnDep;
}

class Teacher {
 public:
  Teacher(TeacherKind kind, const Vocabularies& vocab, const ModelDims& dims, bool structure_head,
          std::uint64_t seed);

  TeacherKind kind() const { return kind_; }
  ParamStore<float>& params() { return store_; }
  const ParamStore<float>& params() const { return store_; }
  bool has_structure_head() const { return structure_head_; }
  std::size_t rep_dim() const { return rep_dim_; }
  TaskKind task() const { return head_.task; }
  std::size_t vocab_size() const { return words_.shape()[0]; }

  // tokens: [n, rep_dim]. nodes: every graph node the sentence readout
  // pools over (the tokens, plus phrase nodes for gcn-con).
  struct Reps {
    T32 tokens;
    T32 nodes;
  };
  Reps encode(const EncodedSentence& s, bool training, std::mt19937_64& rng) const;
  // [1, classes] or [n, tags].
  T32 logits(const EncodedExample& e, bool training, std::mt19937_64& rng) const;
  T32 task_logits(const EncodedExample& e, const Reps& reps, const Reps& partner) const;

  const ArcScorer<float>& arc() const { return arc_; }
  const SpanScorer<float>& span() const { return span_; }

 private:
  T32 token_inputs(const EncodedSentence& s, bool training, std::mt19937_64& rng) const;

  TeacherKind kind_;
  ModelDims dims_;
  bool structure_head_;
  std::size_t rep_dim_ = 0;
  ParamStore<float> store_;
  T32 words_;
  T32 labels_;
  TreeLstm<float> tree_;
  Gcn<float> gcn_;
  Linear<float> gcn_in_;
  TaskHead head_;
  ArcScorer<float> arc_;
  SpanScorer<float> span_;
};

// Student outputs for a mini-batch. For the pair task the batch encodes
// 2B sentences: examples first, partners after.
struct StudentPass {
  SequenceReps<float> reps;
  T32 logits;  // [B, classes] or [sum n, tags] in example order
};

class Student {
 public:
  Student(const Vocabularies& vocab, const ModelDims& dims, std::uint64_t seed);

  ParamStore<float>& params() { return store_; }
  const ParamStore<float>& params() const { return store_; }
  std::size_t rep_dim() const { return lstm_.output_dim(); }
  const ModelDims& dims() const { return dims_; }
  TaskKind task() const { return task_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t outputs() const { return outputs_; }

  // Reads token ids only. `masked` (optional, same shape as the batch's
  // primary sentences) replaces the primary sentences' ids.
  StudentPass forward(const std::vector<const EncodedExample*>& batch, bool training,
                      std::mt19937_64& rng,
                      const std::vector<std::vector<int>>* masked = nullptr) const;
  SequenceReps<float> encode(const std::vector<const std::vector<int>*>& sentences, bool training,
                            std::mt19937_64& rng) const;

  // Rows of sentence b: [n, rep_dim].
  static T32 sentence_reps(const SequenceReps<float>& reps, std::size_t b);
  // Next-token logits from the forward state before each position.
  T32 lm_logits(const SequenceReps<float>& reps, std::size_t b,
                std::span<const int> positions) const;
  ArcScores<float> arcs(const T32& reps) const { return arc_(reps); }
  T32 spans(const T32& reps) const { return span_(reps); }
  T32 project(const T32& reps) const { return proj_(reps); }

 private:
  ModelDims dims_;
  TaskKind task_;
  std::size_t vocab_size_;
  std::size_t outputs_;
  ParamStore<float> store_;
  T32 words_;
  BiLstm<float> lstm_;
  TaskHead head_;
  T32 bos_;
  Linear<float> lm_;
  ArcScorer<float> arc_;
  SpanScorer<float> span_;
  Linear<float> proj_;
};

// Fixed random map f_t from a teacher's representation space to the
// feature space; drawn from `seed`, never trained.
T32 teacher_projection(std::size_t rep_dim, std::size_t feature_dim, std::uint64_t seed);

}  // namespace syndistill

#endif  // SYNDISTILL_MODELS_H_
