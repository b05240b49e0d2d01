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

// Teacher pre-training, the two-phase distillation loop, evaluation
// metrics, run logs and resumable run state.
//
// Distillation iterations are 1-based mini-batch steps. For t <= G1 each
// iteration takes one semantic step and then one step per teacher in the
// order treelstm-dep, gcn-dep, treelstm-con, gcn-con; the syntax flag starts
// on dependency and flips after every t with t % G2 == 0, and only teachers
// of the flagged structure type add their syntax loss. For t > G1 every
// iteration takes one step on the joint loss against the teacher ensemble.

#ifndef SYNDISTILL_TRAIN_H_
#define SYNDISTILL_TRAIN_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "syndistill/checkpoint.h"
#include "syndistill/distill.h"
#include "syndistill/models.h"
#include "syndistill/optim.h"

namespace syndistill {

// ---- Metrics --------------------------------------------------------------

struct Metrics {
  TaskKind task = TaskKind::kClassify;
  std::size_t examples = 0;
  double accuracy = 0.0;  // percent; token accuracy for tagging
  double macro_f1 = 0.0;  // percent; classification only
  double token_f1 = 0.0;  // percent; tagging only
  double primary() const { return task == TaskKind::kTag ? token_f1 : accuracy; }
  std::string to_json() const;
};

// Accuracy and macro-F1 (classes never seen in gold or predictions are
// skipped), both in percent.
Metrics classification_metrics(std::span<const int> predicted, std::span<const int> gold,
                               std::size_t classes);
// Micro F1 over tokens whose gold or predicted tag is not `outside`,
// ignoring span boundaries. 100 when neither side has such a token.
double token_f1(std::span<const int> predicted, std::span<const int> gold, int outside);

// Per-example predictions: one class, or one tag per token.
std::vector<std::vector<int>> predict(const Student& student,
                                      const std::vector<EncodedExample>& data,
                                      std::size_t batch = 64);
std::vector<std::vector<int>> predict(const Teacher& teacher,
                                      const std::vector<EncodedExample>& data);
Metrics score_predictions(const std::vector<std::vector<int>>& predicted,
                          const std::vector<EncodedExample>& data, std::size_t classes);
// Throws std::invalid_argument on an empty data set.
Metrics evaluate(const Student& student, const std::vector<EncodedExample>& data,
                 std::size_t classes);
Metrics evaluate(const Teacher& teacher, const std::vector<EncodedExample>& data,
                 std::size_t classes);
// 1 for a correct class, the fraction of correct tags for tagging.
std::vector<double> example_scores(const std::vector<std::vector<int>>& predicted,
                                   const std::vector<EncodedExample>& data);

// ---- Run logs -------------------------------------------------------------

struct LogEntry {
  std::size_t iteration = 0;
  std::string split;
  std::string metric;
  double value = 0.0;
};

// JSONL lines {iteration, split, metric, value}; kept in memory and, when a
// path is given, appended to the file as they arrive.
class RunLog {
 public:
  RunLog() = default;
  explicit RunLog(std::string path, bool append = false);
  void log(std::size_t iteration, const std::string& split, const std::string& metric,
           double value);
  const std::vector<LogEntry>& entries() const { return entries_; }

 private:
  std::string path_;
  std::vector<LogEntry> entries_;
};

// ---- Teachers -------------------------------------------------------------

struct TeacherTrainConfig {
  std::size_t max_epochs = 30;
  std::size_t batch = 32;
  std::size_t patience = 3;  // epochs without dev improvement
  AdamConfig adam{1e-3};
  double structure_weight = 1.0;
  std::uint64_t seed = 1;
  void validate() const;
};

struct TeacherTrainResult {
  Metrics best_dev;
  std::size_t epochs = 0;
  std::size_t parameters = 0;
};

// Trains on the end task (plus gold arcs or spans when the teacher has a
// structure head), keeping the parameters of the best dev epoch.
TeacherTrainResult train_teacher(Teacher& teacher, const std::vector<EncodedExample>& train,
                                 const std::vector<EncodedExample>& dev, std::size_t classes,
                                 const TeacherTrainConfig& config, RunLog* log = nullptr);

// ---- Teacher outputs ------------------------------------------------------

struct TeacherOutput {
  std::vector<double> probs;    // [classes] or [n, tags]
  std::vector<float> features;  // [n, feature_dim], mode A
  DepTarget dep;                // dependency teachers, mode B
  BinTree tree;                 // constituency teachers, mode B
};

struct TeacherCache {
  std::vector<TeacherKind> kinds;
  std::vector<std::vector<TeacherOutput>> outputs;  // [teacher][example]
  std::size_t vocab_size = 0;
  std::size_t outputs_dim = 0;
  std::size_t feature_dim = 0;
};

struct CacheOptions {
  InjectionMode mode = InjectionMode::kStructure;
  TeacherDist dist = TeacherDist::kSoft;
  bool teacher_trees = false;  // T* from teacher span scorers instead of the input parse
  std::size_t feature_dim = 0;
  std::uint64_t projection_seed = 1;
};

// Frozen forward passes of every teacher over `data`. Teachers must come in
// the fixed visiting order and share the student's vocabularies.
TeacherCache cache_teachers(const std::vector<const Teacher*>& teachers,
                            const std::vector<EncodedExample>& data, const Vocabularies& vocab,
                            const CacheOptions& options);

// ---- Distillation ---------------------------------------------------------

struct Schedule {
  std::size_t T = 10000;
  std::size_t G1 = 300;
  std::size_t G2 = 128;
  std::size_t batch = 32;
  std::size_t eval_every = 200;
  std::size_t patience = 10;
  void validate() const;
};

// True when flag F selects dependency at early-phase iteration t.
bool dependency_turn(std::size_t t, std::size_t G2);

struct DistillOptions {
  DistillConfig loss;
  Schedule schedule;
  AdamConfig adam;
  std::optional<double> fixed_alpha;  // replaces t / T
  bool no_sem = false;
  bool no_syn = false;
  bool no_reg = false;
  std::uint64_t seed = 1;
  void validate() const;
  bool sem_active() const { return !no_sem && loss.lambda2 > 0.0; }
  bool syn_active() const { return !no_syn && loss.lambda1 > 0.0; }
};

// Everything needed to continue a run bit-for-bit.
struct RunState {
  std::size_t t = 0;  // completed iterations
  AdamState<float> adam;
  std::vector<std::vector<float>> best;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t best_iteration = 0;
  std::size_t bad_evals = 0;
  bool finished = false;

  Checkpoint to_checkpoint(const Student& student) const;
  std::string meta_json() const;
  // Restores the student's parameters too.
  static RunState restore(const Checkpoint& ckpt, const std::string& meta, Student& student);
};

struct DistillResult {
  Metrics best_dev;
  std::size_t best_iteration = 0;
  std::size_t iterations = 0;
  std::size_t skipped_steps = 0;
  // One entry per optimizer step: "t=3 sem", "t=3 output[gcn-dep]+dep",
  // "t=7 all", ...
  std::vector<std::string> trace;
};

// Runs (or continues) the schedule. With `stop_after` > 0 the run pauses once
// state.t reaches it, leaving `state` resumable; otherwise it runs to the end
// and restores the best parameters.
DistillResult distill_student(Student& student, const TeacherCache& cache,
                              const std::vector<EncodedExample>& train,
                              const std::vector<EncodedExample>& dev, std::size_t classes,
                              const DistillOptions& options, RunState& state,
                              RunLog* log = nullptr, std::size_t stop_after = 0);

// ---- Model files ----------------------------------------------------------

struct ModelMeta {
  std::string kind;  // "student" or a teacher name
  Vocabularies vocab;
  ModelDims dims;
  bool structure_head = false;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static ModelMeta from_json(std::string_view text);
};

// <stem>.syd holds the parameters, <stem>.json the metadata.
void save_model(const std::string& stem, const ParamStore<float>& params, const ModelMeta& meta);
ModelMeta load_meta(const std::string& stem);
void load_params(const std::string& stem, ParamStore<float>& params);

}  // namespace syndistill

#endif  // SYNDISTILL_TRAIN_H_
