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

#include "syndistill/train.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace syndistill {
namespace {

using nlohmann::json;

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint32_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag,
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint32_t kShuffleStream = 1;
constexpr std::uint32_t kStepStream = 2;

std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64 rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng() % i]);
  return p;
}

std::vector<std::vector<float>> snapshot(const ParamStore<float>& store) {
  std::vector<std::vector<float>> out;
  for (const auto& [name, t] : store.entries()) out.emplace_back(t.data().begin(), t.data().end());
  return out;
}

void restore(ParamStore<float>& store, const std::vector<std::vector<float>>& values) {
  if (values.size() != store.size()) throw std::logic_error("snapshot does not match parameters");
  for (std::size_t k = 0; k < values.size(); ++k) {
    auto dst = store.tensors()[k].mutable_data();
    std::copy(values[k].begin(), values[k].end(), dst.begin());
  }
}

int argmax_row(const T32& logits, std::size_t r) {
  const std::size_t C = logits.cols();
  int best = 0;
  for (std::size_t c = 1; c < C; ++c)
    if (logits.at(r, c) > logits.at(r, static_cast<std::size_t>(best))) best = static_cast<int>(c);
  return best;
}

std::vector<double> softmax_rows(const T32& logits) {
  const std::size_t R = logits.rows(), C = logits.cols();
  std::vector<double> out(R * C);
  for (std::size_t r = 0; r < R; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < C; ++c) mx = std::max(mx, static_cast<double>(logits.at(r, c)));
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += out[r * C + c] = std::exp(logits.at(r, c) - mx);
    for (std::size_t c = 0; c < C; ++c) out[r * C + c] /= z;
  }
  return out;
}

std::vector<int> gold_of(const EncodedExample& e) {
  return e.tag_ids.empty() ? std::vector<int>{e.label} : e.tag_ids;
}

// One-hot cross-entropy, mean over rows.
T32 gold_loss(const T32& logits, std::span<const int> gold) {
  const std::size_t C = logits.cols();
  std::vector<double> targets(gold.size() * C, 0.0);
  for (std::size_t r = 0; r < gold.size(); ++r) targets[r * C + gold[r]] = 1.0;
  return soft_cross_entropy(logits, targets);
}

T32 mean_of(const std::vector<T32>& terms) {
  T32 acc = terms.front();
  for (std::size_t k = 1; k < terms.size(); ++k) acc = add(acc, terms[k]);
  return terms.size() == 1 ? acc : scale(acc, 1.0f / static_cast<float>(terms.size()));
}

void require_data(const std::vector<EncodedExample>& data, const char* what) {
  if (data.empty()) throw std::invalid_argument(std::string(what) + ": empty data set");
}

}  // namespace

// ---- Metrics --------------------------------------------------------------

std::string Metrics::to_json() const {
  json j{{"task", std::string(task_name(task))}, {"examples", examples}, {"accuracy", accuracy}};
  if (task == TaskKind::kTag) {
    j["token_f1"] = token_f1;
  } else {
    j["macro_f1"] = macro_f1;
  }
  return j.dump();
}

Metrics classification_metrics(std::span<const int> predicted, std::span<const int> gold,
                               std::size_t classes) {
  if (predicted.size() != gold.size()) throw std::invalid_argument("prediction count mismatch");
  if (gold.empty()) throw std::invalid_argument("no examples to score");
  std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto p = static_cast<std::size_t>(predicted[i]), g = static_cast<std::size_t>(gold[i]);
    if (p >= classes || g >= classes) throw std::invalid_argument("class id out of range");
    if (p == g) {
      ++correct;
      ++tp[g];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  Metrics m;
  m.examples = gold.size();
  m.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(gold.size());
  double f1_sum = 0.0;
  std::size_t seen = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (tp[c] + fp[c] + fn[c] == 0) continue;
    ++seen;
    f1_sum += 2.0 * tp[c] / static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
  }
  m.macro_f1 = 100.0 * f1_sum / static_cast<double>(seen);
  return m;
}

double token_f1(std::span<const int> predicted, std::span<const int> gold, int outside) {
  if (predicted.size() != gold.size()) throw std::invalid_argument("prediction count mismatch");
  std::size_t tp = 0, pred = 0, real = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predicted[i] != outside) ++pred;
    if (gold[i] != outside) ++real;
    if (gold[i] != outside && predicted[i] == gold[i]) ++tp;
  }
  if (pred == 0 && real == 0) return 100.0;
  return 100.0 * 2.0 * tp / static_cast<double>(pred + real);
}

std::vector<std::vector<int>> predict(const Student& student,
                                      const std::vector<EncodedExample>& data,
                                      std::size_t batch) {
  std::vector<std::vector<int>> out;
  std::mt19937_64 rng(0);
  for (std::size_t start = 0; start < data.size(); start += batch) {
    std::vector<const EncodedExample*> chunk;
    for (std::size_t i = start; i < std::min(data.size(), start + batch); ++i)
      chunk.push_back(&data[i]);
    const StudentPass pass = student.forward(chunk, false, rng);
    std::size_t row = 0;
    for (const auto* e : chunk) {
      const std::size_t rows = student.task() == TaskKind::kTag ? e->sentence.size() : 1;
      std::vector<int> pred;
      for (std::size_t r = 0; r < rows; ++r) pred.push_back(argmax_row(pass.logits, row++));
      out.push_back(std::move(pred));
    }
  }
  return out;
}

std::vector<std::vector<int>> predict(const Teacher& teacher,
                                      const std::vector<EncodedExample>& data) {
  std::vector<std::vector<int>> out;
  std::mt19937_64 rng(0);
  for (const auto& e : data) {
    const T32 logits = teacher.logits(e, false, rng);
    std::vector<int> pred;
    for (std::size_t r = 0; r < logits.rows(); ++r) pred.push_back(argmax_row(logits, r));
    out.push_back(std::move(pred));
  }
  return out;
}

Metrics score_predictions(const std::vector<std::vector<int>>& predicted,
                          const std::vector<EncodedExample>& data, std::size_t classes) {
  require_data(data, "evaluate");
  if (predicted.size() != data.size()) throw std::invalid_argument("prediction count mismatch");
  const bool tagging = !data.front().tag_ids.empty();
  std::vector<int> pred, gold;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto g = gold_of(data[i]);
    if (predicted[i].size() != g.size()) throw std::invalid_argument("prediction length mismatch");
    pred.insert(pred.end(), predicted[i].begin(), predicted[i].end());
    gold.insert(gold.end(), g.begin(), g.end());
  }
  if (!tagging) {
    Metrics m = classification_metrics(pred, gold, classes);
    m.task = data.front().partner ? TaskKind::kPair : TaskKind::kClassify;
    return m;
  }
  Metrics m;
  m.task = TaskKind::kTag;
  m.examples = data.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += pred[i] == gold[i];
  m.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(gold.size());
  m.token_f1 = token_f1(pred, gold, 0);
  return m;
}

Metrics evaluate(const Student& student, const std::vector<EncodedExample>& data,
                 std::size_t classes) {
  require_data(data, "evaluate");
  return score_predictions(predict(student, data), data, classes);
}

Metrics evaluate(const Teacher& teacher, const std::vector<EncodedExample>& data,
                 std::size_t classes) {
  require_data(data, "evaluate");
  return score_predictions(predict(teacher, data), data, classes);
}

std::vector<double> example_scores(const std::vector<std::vector<int>>& predicted,
                                   const std::vector<EncodedExample>& data) {
  if (predicted.size() != data.size()) throw std::invalid_argument("prediction count mismatch");
  std::vector<double> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto g = gold_of(data[i]);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < g.size(); ++k) correct += predicted[i].at(k) == g[k];
    out.push_back(static_cast<double>(correct) / static_cast<double>(g.size()));
  }
  return out;
}

// ---- Run log --------------------------------------------------------------

RunLog::RunLog(std::string path, bool append) : path_(std::move(path)) {
  if (path_.empty()) return;
  std::ofstream out(path_, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open run log " + path_);
}

void RunLog::log(std::size_t iteration, const std::string& split, const std::string& metric,
                 double value) {
  entries_.push_back({iteration, split, metric, value});
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  out << json{{"iteration", iteration}, {"split", split}, {"metric", metric}, {"value", value}}
             .dump()
      << '\n';
}

// ---- Teacher training -----------------------------------------------------

void TeacherTrainConfig::validate() const {
  if (max_epochs == 0) throw std::invalid_argument("max_epochs must be positive");
  if (batch == 0) throw std::invalid_argument("batch must be positive");
  if (patience == 0) throw std::invalid_argument("patience must be positive");
  if (!(adam.lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(structure_weight >= 0.0)) throw std::invalid_argument("structure_weight must be >= 0");
}

TeacherTrainResult train_teacher(Teacher& teacher, const std::vector<EncodedExample>& train,
                                 const std::vector<EncodedExample>& dev, std::size_t classes,
                                 const TeacherTrainConfig& config, RunLog* log) {
  config.validate();
  require_data(train, "train_teacher");
  require_data(dev, "train_teacher");
  ParamStore<float>& store = teacher.params();
  Adam<float> adam(store, config.adam);
  TeacherTrainResult result;
  result.parameters = store.scalar_count();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<float>> best_values = snapshot(store);
  std::size_t bad = 0;
  const bool dep = is_dependency(teacher.kind());
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    auto rng = stream_rng(config.seed, kStepStream, epoch);
    const auto order = permutation(train.size(), stream_rng(config.seed, kShuffleStream, epoch));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      std::vector<T32> terms;
      for (std::size_t k = start; k < std::min(order.size(), start + config.batch); ++k) {
        const EncodedExample& e = train[order[k]];
        const Teacher::Reps reps = teacher.encode(e.sentence, true, rng);
        Teacher::Reps partner;
        if (e.partner) partner = teacher.encode(*e.partner, true, rng);
        const auto gold = gold_of(e);
        T32 loss = gold_loss(teacher.task_logits(e, reps, partner), gold);
        if (teacher.has_structure_head() && config.structure_weight > 0.0) {
          const auto& s = e.sentence;
          const float w = static_cast<float>(config.structure_weight / static_cast<double>(s.size()));
          const T32 structure =
              dep ? dep_inject_loss(DepTarget::hard(s.dep.heads, s.dep_label_ids,
                                                    teacher.arc().labels()),
                                    teacher.arc()(reps.tokens))
                  : con_inject_loss(teacher.span()(reps.tokens), s.bin);
          loss = add(loss, scale(structure, w));
        }
        terms.push_back(loss);
      }
      const T32 loss = mean_of(terms);
      if (!std::isfinite(loss.item()))
        throw NonFiniteLoss("teacher " + std::string(teacher_name(teacher.kind())) +
                            ": non-finite loss in epoch " + std::to_string(epoch));
      epoch_loss += loss.item() * static_cast<double>(terms.size());
      adam.zero_grad();
      loss.backward();
      adam.step();
    }
    const Metrics m = evaluate(teacher, dev, classes);
    result.epochs = epoch;
    if (log) {
      log->log(epoch, "train", "loss", epoch_loss / static_cast<double>(train.size()));
      log->log(epoch, "dev", "primary", m.primary());
    }
    if (m.primary() > best) {
      best = m.primary();
      best_values = snapshot(store);
      result.best_dev = m;
      bad = 0;
    } else if (++bad >= config.patience) {
      break;
    }
  }
  restore(store, best_values);
  store.zero_grad();
  return result;
}

// ---- Teacher cache --------------------------------------------------------

TeacherCache cache_teachers(const std::vector<const Teacher*>& teachers,
                            const std::vector<EncodedExample>& data, const Vocabularies& vocab,
                            const CacheOptions& options) {
  if (teachers.empty()) throw std::invalid_argument("no teachers");
  TeacherCache cache;
  cache.vocab_size = vocab.words.size();
  cache.outputs_dim = vocab.outputs();
  cache.feature_dim = options.feature_dim;
  std::size_t order = 0;
  for (std::size_t k = 0; k < teachers.size(); ++k) {
    const Teacher& teacher = *teachers[k];
    const TeacherKind kind = teacher.kind();
    while (order < std::size(kAllTeachers) && kAllTeachers[order] != kind) ++order;
    if (order == std::size(kAllTeachers))
      throw std::invalid_argument("teachers must follow the order treelstm-dep, gcn-dep, "
                                  "treelstm-con, gcn-con without repeats");
    ++order;
    if (teacher.vocab_size() != vocab.words.size() || teacher.task() != vocab.task)
      throw std::invalid_argument("teacher " + std::string(teacher_name(kind)) +
                                  " does not match the student vocabulary or task");
    const bool dep = is_dependency(kind);
    const bool needs_head = options.mode == InjectionMode::kStructure &&
                            ((dep && options.dist == TeacherDist::kSoft) ||
                             (!dep && options.teacher_trees));
    if (needs_head && !teacher.has_structure_head())
      throw std::invalid_argument("teacher " + std::string(teacher_name(kind)) +
                                  " was trained without a structure head");
    T32 projection;
    if (options.mode == InjectionMode::kFeature) {
      if (options.feature_dim == 0) throw std::invalid_argument("feature_dim must be positive");
      projection = teacher_projection(teacher.rep_dim(), options.feature_dim,
                                      options.projection_seed + k);
    }
    cache.kinds.push_back(kind);
    std::vector<TeacherOutput> outs;
    outs.reserve(data.size());
    std::mt19937_64 rng(0);
    for (const auto& e : data) {
      TeacherOutput o;
      const Teacher::Reps enc = teacher.encode(e.sentence, false, rng);
      const T32& reps = enc.tokens;
      Teacher::Reps partner;
      if (e.partner) partner = teacher.encode(*e.partner, false, rng);
      o.probs = softmax_rows(teacher.task_logits(e, enc, partner));
      const auto& s = e.sentence;
      const std::size_t n = s.size();
      if (options.mode == InjectionMode::kFeature) {
        const T32 f = matmul(reps, projection);
        o.features.assign(f.data().begin(), f.data().end());
      } else if (dep && options.dist == TeacherDist::kHard) {
        o.dep = DepTarget::hard(s.dep.heads, s.dep_label_ids, vocab.dep_labels.size());
      } else if (dep) {
        const ArcScores<float> scores = teacher.arc()(reps);
        DepTarget t;
        t.n = n;
        t.labels = vocab.dep_labels.size();
        t.arcs = softmax_rows(scores.arcs);
        for (std::size_t i = 0; i < n; ++i) t.heads.push_back(argmax_row(scores.arcs, i));
        t.label_dist = softmax_rows(label_logits(scores, std::span<const int>(t.heads)));
        o.dep = std::move(t);
      } else if (options.teacher_trees) {
        o.tree = cyk_max(to_span_scores(teacher.span()(reps), static_cast<int>(n))).tree;
      } else {
        o.tree = s.bin;
      }
      outs.push_back(std::move(o));
    }
    cache.outputs.push_back(std::move(outs));
  }
  return cache;
}

// ---- Distillation ---------------------------------------------------------

void Schedule::validate() const {
  if (!(0 < G2 && G2 <= G1 && G1 <= T))
    throw std::invalid_argument("schedule needs 0 < G2 <= G1 <= T (got G2=" + std::to_string(G2) +
                                ", G1=" + std::to_string(G1) + ", T=" + std::to_string(T) + ")");
  if (batch == 0) throw std::invalid_argument("batch must be positive");
  if (eval_every == 0) throw std::invalid_argument("eval_every must be positive");
  if (patience == 0) throw std::invalid_argument("patience must be positive");
}

bool dependency_turn(std::size_t t, std::size_t G2) {
  if (t == 0 || G2 == 0) throw std::invalid_argument("dependency_turn: t and G2 must be positive");
  return ((t - 1) / G2) % 2 == 0;
}

void DistillOptions::validate() const {
  loss.validate();
  schedule.validate();
  if (!(adam.lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (fixed_alpha && !(*fixed_alpha >= 0.0 && *fixed_alpha <= 1.0))
    throw std::invalid_argument("alpha must be in [0, 1]");
}

namespace {

// Losses of one student pass over a batch.
class BatchLosses {
 public:
  BatchLosses(const Student& student, const TeacherCache& cache, const DistillOptions& options,
              const std::vector<std::size_t>& index, const std::vector<EncodedExample>& train)
      : student_(student), cache_(cache), options_(options), index_(index), train_(train) {}

  // Cross-entropy against the alpha-mixed targets of the given teachers.
  T32 output(const StudentPass& pass, const std::vector<std::size_t>& teachers,
             double alpha) const {
    const std::size_t C = pass.logits.cols();
    std::vector<double> targets;
    targets.reserve(pass.logits.rows() * C);
    for (std::size_t b = 0; b < index_.size(); ++b) {
      const EncodedExample& e = train_[index_[b]];
      const auto gold = gold_of(e);
      for (std::size_t r = 0; r < gold.size(); ++r) {
        std::vector<std::vector<double>> dists;
        for (std::size_t k : teachers) {
          const auto& p = cache_.outputs[k][index_[b]].probs;
          dists.emplace_back(p.begin() + r * C, p.begin() + (r + 1) * C);
        }
        const auto mix = mixed_target(gold[r], C, dists, alpha);
        targets.insert(targets.end(), mix.begin(), mix.end());
      }
    }
    return soft_cross_entropy(pass.logits, targets, options_.loss.temperature);
  }

  // Mean over the batch of the teachers' syntax loss of one structure type.
  T32 syntax(const StudentPass& pass, const std::vector<std::size_t>& teachers) const {
    std::vector<T32> per_example;
    const bool feature = options_.loss.mode == InjectionMode::kFeature;
    for (std::size_t b = 0; b < index_.size(); ++b) {
      const std::size_t i = index_[b];
      const T32 reps = Student::sentence_reps(pass.reps, b);
      std::vector<T32> terms;
      if (feature) {
        const T32 projected = student_.project(reps);
        for (std::size_t k : teachers) {
          const auto& f = cache_.outputs[k][i].features;
          terms.push_back(feat_distill(T32::from(projected.shape(), f), projected));
        }
      } else if (is_dependency(cache_.kinds[teachers.front()])) {
        const ArcScores<float> scores = student_.arcs(reps);
        for (std::size_t k : teachers) terms.push_back(dep_inject_loss(cache_.outputs[k][i].dep, scores));
      } else {
        const T32 table = student_.spans(reps);
        // Teachers that share T* share the hinge.
        std::vector<const BinTree*> seen;
        for (std::size_t k : teachers) {
          const BinTree& tree = cache_.outputs[k][i].tree;
          auto same = std::find_if(seen.begin(), seen.end(),
                                   [&](const BinTree* t) { return *t == tree; });
          if (same != seen.end()) {
            terms.push_back(terms[static_cast<std::size_t>(same - seen.begin())]);
          } else {
            terms.push_back(con_inject_loss(table, tree));
          }
          seen.push_back(&tree);
        }
      }
      per_example.push_back(mean_of(terms));
    }
    return mean_of(per_example);
  }

  T32 semantic(const std::vector<const EncodedExample*>& batch, std::mt19937_64& rng) const {
    std::vector<std::vector<int>> masked;
    std::vector<std::vector<int>> positions;
    for (const auto* e : batch) {
      positions.push_back(sample_mask(e->sentence.size(), options_.loss.mask_ratio, rng));
      masked.push_back(e->sentence.ids);
      for (int j : positions.back()) masked.back()[j] = kMaskId;
    }
    const StudentPass pass = student_.forward(batch, true, rng, &masked);
    std::vector<T32> terms;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      std::vector<int> targets;
      for (int j : positions[b]) targets.push_back(batch[b]->sentence.ids[j]);
      terms.push_back(
          semantic_lm_loss(student_.lm_logits(pass.reps, b, positions[b]), std::span<const int>(targets)));
    }
    return mean_of(terms);
  }

 private:
  const Student& student_;
  const TeacherCache& cache_;
  const DistillOptions& options_;
  const std::vector<std::size_t>& index_;
  const std::vector<EncodedExample>& train_;
};

}  // namespace

DistillResult distill_student(Student& student, const TeacherCache& cache,
                              const std::vector<EncodedExample>& train,
                              const std::vector<EncodedExample>& dev, std::size_t classes,
                              const DistillOptions& options, RunState& state, RunLog* log,
                              std::size_t stop_after) {
  options.validate();
  require_data(train, "distill");
  require_data(dev, "distill");
  if (cache.kinds.empty()) throw std::invalid_argument("distill: no teachers");
  if (cache.vocab_size != student.vocab_size() || cache.outputs_dim != student.outputs())
    throw std::invalid_argument("distill: teacher and student vocabularies differ");
  for (const auto& outs : cache.outputs)
    if (outs.size() != train.size())
      throw std::invalid_argument("distill: teacher outputs do not cover the training set");
  if (options.loss.mode == InjectionMode::kFeature && cache.feature_dim != student.dims().feature_dim)
    throw std::invalid_argument("distill: feature dimension mismatch");

  const Schedule& S = options.schedule;
  const DistillConfig& L = options.loss;
  ParamStore<float>& store = student.params();
  const std::vector<T32> params = store.tensors();
  Adam<float> adam(params, options.adam);
  adam.state() = state.adam;
  if (state.best.empty()) state.best = snapshot(store);

  std::vector<std::size_t> all, dep_teachers, con_teachers;
  for (std::size_t k = 0; k < cache.kinds.size(); ++k) {
    all.push_back(k);
    (is_dependency(cache.kinds[k]) ? dep_teachers : con_teachers).push_back(k);
  }
  const std::size_t N = train.size();
  const std::size_t B = std::min(S.batch, N);
  const std::size_t per_epoch = (N + B - 1) / B;
  std::size_t cached_epoch = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order;

  DistillResult result;
  auto step = [&](const T32& loss) {
    adam.zero_grad();
    loss.backward();
    adam.step();
  };
  auto total = [&](const LossComponents<float>& parts, std::size_t t, const char* what) {
    try {
      return total_loss(parts, L.lambda1, L.lambda2);
    } catch (const NonFiniteLoss& err) {
      throw NonFiniteLoss("iteration " + std::to_string(t) + " (" + what + "): " + err.what());
    }
  };
  const bool syn = options.syn_active();
  const bool sem = options.sem_active();
  auto reg = [&]() -> T32 {
    if (!syn || options.no_reg || L.zeta == 0.0) return T32();
    return reg_loss<float>(params, L.zeta);
  };

  while (!state.finished && state.t < S.T && (stop_after == 0 || state.t < stop_after)) {
    const std::size_t t = state.t + 1;
    const std::size_t epoch = (t - 1) / per_epoch;
    if (epoch != cached_epoch) {
      order = permutation(N, stream_rng(options.seed, kShuffleStream, epoch));
      cached_epoch = epoch;
    }
    const std::size_t begin = ((t - 1) % per_epoch) * B;
    std::vector<std::size_t> index(order.begin() + begin,
                                   order.begin() + std::min(N, begin + B));
    std::vector<const EncodedExample*> batch;
    for (std::size_t i : index) batch.push_back(&train[i]);
    auto rng = stream_rng(options.seed, kStepStream, t);
    const double alpha = options.fixed_alpha ? *options.fixed_alpha : anneal_alpha(t, S.T);
    BatchLosses losses(student, cache, options, index, train);
    const std::string tag = "t=" + std::to_string(t) + " ";
    double out_sum = 0.0, syn_sum = 0.0, sem_value = 0.0, reg_value = 0.0, loss_sum = 0.0;
    std::size_t syn_count = 0, out_count = 0;

    if (t <= S.G1) {
      if (sem) {
        const T32 s = losses.semantic(batch, rng);
        LossComponents<float> parts;
        parts.sem = s;
        const T32 loss = total(parts, t, "sem");
        sem_value = s.item();
        loss_sum += loss.item();
        step(loss);
        result.trace.push_back(tag + "sem");
      }
      const bool dep_turn = dependency_turn(t, S.G2);
      for (std::size_t k : all) {
        const StudentPass pass = student.forward(batch, true, rng);
        LossComponents<float> parts;
        parts.output = losses.output(pass, {k}, alpha);
        std::string name = tag + "output[" + std::string(teacher_name(cache.kinds[k])) + "]";
        const bool matches = is_dependency(cache.kinds[k]) == dep_turn;
        if (syn && matches) {
          parts.syn = losses.syntax(pass, {k});
          parts.reg = reg();
          name += dep_turn ? "+dep" : "+con";
          syn_sum += parts.syn.item();
          ++syn_count;
          if (parts.reg.defined()) reg_value = parts.reg.item();
        }
        const T32 loss = total(parts, t, name.c_str());
        out_sum += parts.output.item();
        ++out_count;
        loss_sum += loss.item();
        step(loss);
        result.trace.push_back(name);
      }
    } else {
      const StudentPass pass = student.forward(batch, true, rng);
      LossComponents<float> parts;
      parts.output = losses.output(pass, all, alpha);
      if (syn) {
        const T32 zero = T32::scalar(0.0f);
        const T32 d = L.eta > 0.0 && !dep_teachers.empty() ? losses.syntax(pass, dep_teachers) : zero;
        const T32 c = L.eta < 1.0 && !con_teachers.empty() ? losses.syntax(pass, con_teachers) : zero;
        parts.syn = combine_syn(d, c, L.eta);
        parts.reg = reg();
        syn_sum = parts.syn.item();
        syn_count = 1;
        if (parts.reg.defined()) reg_value = parts.reg.item();
      }
      if (sem) {
        parts.sem = losses.semantic(batch, rng);
        sem_value = parts.sem.item();
      }
      const T32 loss = total(parts, t, "all");
      out_sum = parts.output.item();
      out_count = 1;
      loss_sum = loss.item();
      step(loss);
      result.trace.push_back(tag + "all");
    }
    state.t = t;
    if (log) {
      log->log(t, "train", "L_output", out_count ? out_sum / static_cast<double>(out_count) : 0.0);
      log->log(t, "train", "L_syn", syn_count ? syn_sum / static_cast<double>(syn_count) : 0.0);
      log->log(t, "train", "L_sem", sem_value);
      log->log(t, "train", "L_reg", reg_value);
      log->log(t, "train", "loss", loss_sum);
    }
    if (t % S.eval_every == 0 || t == S.T) {
      const Metrics m = evaluate(student, dev, classes);
      if (log) log->log(t, "dev", "primary", m.primary());
      if (m.primary() > state.best_metric) {
        state.best_metric = m.primary();
        state.best_iteration = t;
        state.best = snapshot(store);
        state.bad_evals = 0;
      } else if (++state.bad_evals >= S.patience) {
        state.finished = true;
      }
    }
    if (t == S.T) state.finished = true;
  }
  state.adam = adam.state();
  result.skipped_steps = static_cast<std::size_t>(state.adam.skipped);
  result.iterations = state.t;
  if (state.finished) {
    restore(store, state.best);
    store.zero_grad();
    result.best_dev = evaluate(student, dev, classes);
    result.best_iteration = state.best_iteration;
  }
  return result;
}

// ---- Run state ------------------------------------------------------------

Checkpoint RunState::to_checkpoint(const Student& student) const {
  Checkpoint ckpt = Checkpoint::from_params(student.params());
  for (std::size_t k = 0; k < adam.m.size(); ++k) {
    ckpt.add("adam.m." + std::to_string(k), {adam.m[k].size()}, adam.m[k]);
    ckpt.add("adam.v." + std::to_string(k), {adam.v[k].size()}, adam.v[k]);
  }
  for (std::size_t k = 0; k < best.size(); ++k)
    ckpt.add("best." + std::to_string(k), {best[k].size()}, best[k]);
  return ckpt;
}

std::string RunState::meta_json() const {
  json j{{"t", t},
         {"adam_step", adam.step},
         {"adam_skipped", adam.skipped},
         {"moments", adam.m.size()},
         {"best_slots", best.size()},
         {"best_iteration", best_iteration},
         {"bad_evals", bad_evals},
         {"finished", finished}};
  j["best_metric"] = std::isfinite(best_metric) ? json(best_metric) : json(nullptr);
  return j.dump();
}

RunState RunState::restore(const Checkpoint& ckpt, const std::string& meta, Student& student) {
  const json j = json::parse(meta);
  ckpt.apply_to(student.params());
  RunState s;
  s.t = j.at("t");
  s.adam.step = j.at("adam_step");
  s.adam.skipped = j.at("adam_skipped");
  s.best_iteration = j.at("best_iteration");
  s.bad_evals = j.at("bad_evals");
  s.finished = j.at("finished");
  if (!j.at("best_metric").is_null()) s.best_metric = j.at("best_metric");
  auto values = [&](const std::string& name) {
    const CheckpointRecord* r = ckpt.find(name);
    if (!r) throw CheckpointError("run state lacks record " + name);
    return r->values;
  };
  const std::size_t moments = j.at("moments");
  for (std::size_t k = 0; k < moments; ++k) {
    s.adam.m.push_back(values("adam.m." + std::to_string(k)));
    s.adam.v.push_back(values("adam.v." + std::to_string(k)));
  }
  const std::size_t slots = j.at("best_slots");
  for (std::size_t k = 0; k < slots; ++k) s.best.push_back(values("best." + std::to_string(k)));
  return s;
}

// ---- Model files ----------------------------------------------------------

std::string ModelMeta::to_json() const {
  json j{{"kind", kind},
         {"vocab", json::parse(vocab.to_json())},
         {"dims", json::parse(dims.to_json())},
         {"structure_head", structure_head},
         {"seed", seed}};
  return j.dump(1);
}

ModelMeta ModelMeta::from_json(std::string_view text) {
  const json j = json::parse(text);
  ModelMeta m;
  m.kind = j.at("kind");
  m.vocab = Vocabularies::from_json(j.at("vocab").dump());
  m.dims = ModelDims::from_json(j.at("dims").dump());
  m.structure_head = j.at("structure_head");
  m.seed = j.at("seed");
  return m;
}

void save_model(const std::string& stem, const ParamStore<float>& params, const ModelMeta& meta) {
  Checkpoint::from_params(params).write(stem + ".syd");
  std::ofstream out(stem + ".json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + stem + ".json");
  out << meta.to_json() << '\n';
}

ModelMeta load_meta(const std::string& stem) {
  std::ifstream in(stem + ".json");
  if (!in) throw std::runtime_error("cannot read " + stem + ".json");
  std::stringstream ss;
  ss << in.rdbuf();
  return ModelMeta::from_json(ss.str());
}

void load_params(const std::string& stem, ParamStore<float>& params) {
  Checkpoint::read(stem + ".syd").apply_to(params);
}

}  // namespace syndistill
