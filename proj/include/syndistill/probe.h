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

// Linear probes over frozen token representations, and per-example
// syntax-dominance scores from two ablated students.

#ifndef SYNDISTILL_PROBE_H_
#define SYNDISTILL_PROBE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "syndistill/models.h"
#include "syndistill/optim.h"

namespace syndistill {

enum class ProbeKind { kConstituent, kDependency };
std::string_view probe_name(ProbeKind kind);
ProbeKind parse_probe(std::string_view name);

struct ProbeConfig {
  std::size_t epochs = 30;
  std::size_t batch = 64;
  AdamConfig adam{1e-2};
  std::uint64_t seed = 1;
  void validate() const;
};

// Labeled feature rows for one probe task. Constituent items are the
// non-null spans of length >= 2 of the binarized tree, as
// [r_last - r_first; r_first; r_last]; dependency items are non-root arcs,
// as [r_head; r_dep].
struct ProbeItems {
  std::size_t dim = 0;
  std::vector<float> features;  // [items, dim]
  std::vector<int> labels;
  std::size_t size() const { return labels.size(); }
};

// Top-layer representations of each sentence, detached from any graph.
std::vector<T32> frozen_reps(const Student& student, const std::vector<EncodedExample>& data,
                             std::size_t batch = 64);
ProbeItems probe_items(ProbeKind kind, const std::vector<T32>& reps,
                       const std::vector<EncodedExample>& data);

struct ProbeResult {
  ProbeKind kind = ProbeKind::kDependency;
  double accuracy = 0.0;  // percent, held out
  double majority = 0.0;  // percent of held-out items carrying the most frequent training label
  std::size_t train_items = 0;
  std::size_t test_items = 0;
  std::string to_json() const;
};

// Trains a linear softmax probe on `train` and scores it on `test`.
ProbeResult train_probe(ProbeKind kind, const ProbeItems& train, const ProbeItems& test,
                        std::size_t classes, const ProbeConfig& config);

// End to end on a student; throws std::logic_error if the backbone changed.
ProbeResult probe_student(const Student& student, ProbeKind kind,
                          const std::vector<EncodedExample>& train,
                          const std::vector<EncodedExample>& test, const Vocabularies& vocab,
                          const ProbeConfig& config);

// Per-example drops d = max(0, full - ablated). dominance = d_dep / (d_dep +
// d_con), 0.5 when both are zero; above 0.5 leans on dependency syntax.
// `no_dep` comes from the student trained with eta = 0, `no_con` with eta = 1.
std::vector<double> dominance_scores(const std::vector<double>& full,
                                     const std::vector<double>& no_dep,
                                     const std::vector<double>& no_con);

struct DominanceSummary {
  std::vector<double> scores;
  std::vector<std::size_t> histogram;  // 10 equal bins over [0, 1]
  double mean = 0.0;
  std::size_t dependency_leaning = 0;
  std::size_t constituency_leaning = 0;
  std::size_t balanced = 0;

  static DominanceSummary of(std::vector<double> scores, std::size_t bins = 10);
  std::string histogram_csv() const;
  std::string to_json() const;
};

}  // namespace syndistill

#endif  // SYNDISTILL_PROBE_H_
