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

// Effective settings of one command-line run. Every field has a JSON key;
// the same key, with '_' replaced by '-', is also a flag. Values resolve as
// defaults < config file < flags.

#ifndef SYNDISTILL_TOOLS_RUN_CONFIG_H_
#define SYNDISTILL_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "syndistill/models.h"
#include "syndistill/probe.h"
#include "syndistill/synthetic.h"
#include "syndistill/train.h"

namespace syndistill::cli {

// Bad keys, types or ranges.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or unreadable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string task = "classify";
  std::string out = "out";

  std::string train, dev, test, data, text;
  std::size_t min_count = 1;

  // gen-data: n training examples plus n_dev and n_test held out.
  std::size_t n = 1000;
  std::size_t n_dev = 200;
  std::size_t n_test = 200;
  int max_len = 12;
  int grammar_size = 6;
  double adj_prob = 0.25;
  double pp_prob = 0.3;
  double rc_prob = 0.35;
  double transitive_prob = 0.5;

  ModelDims dims;
  std::string teacher;                // train-teacher
  std::vector<std::string> teachers;  // distill: teacher model stems
  std::string student;                // eval, probe, induce: model stem
  bool structure_head = true;

  std::size_t teacher_epochs = 30;
  std::size_t teacher_batch = 32;
  std::size_t teacher_patience = 3;
  double teacher_lr = 1e-3;
  double structure_weight = 1.0;

  DistillConfig loss;
  Schedule schedule;
  double lr = 1e-5;
  std::optional<double> alpha;  // fixed annealing weight
  bool no_sem = false;
  bool no_syn = false;
  bool no_reg = false;
  bool no_anneal = false;  // alpha fixed at 0
  bool teacher_trees = false;
  std::size_t checkpoint_every = 500;
  bool resume = false;
  std::size_t stop_after = 0;  // pause once this many iterations are done

  std::string probe = "dependency";  // dependency | constituent | dominance
  std::string student_no_dep;        // dominance: eta = 0 student
  std::string student_no_con;        // dominance: eta = 1 student
  std::size_t probe_epochs = 30;
  std::size_t probe_batch = 64;
  double probe_lr = 1e-2;

  std::size_t instances = 25;
  double tolerance = 1e-5;

  // Throws ConfigError naming the first bad field.
  void validate() const;
  std::string to_json() const;
  // Unknown keys and mistyped values are rejected; missing keys keep their
  // defaults.
  static RunConfig from_json(std::string_view text);

  TaskKind task_kind() const { return parse_task(task); }
  SyntheticConfig synthetic() const;
  TeacherTrainConfig teacher_config() const;
  DistillOptions distill_options() const;
  ProbeConfig probe_config() const;
};

// Layers `overrides` (key -> raw flag text) over `base` (a RunConfig JSON
// object). Booleans take "true"/"false", lists are comma-separated.
std::string apply_overrides(const std::string& base,
                            const std::map<std::string, std::string>& overrides);

// Flag-style name of every key, in declaration order, with whether the key
// is boolean.
std::vector<std::pair<std::string, bool>> config_keys();

// defaults < config file (if any) < flag overrides, then validated.
RunConfig resolve_config(const std::string& config_path,
                         const std::map<std::string, std::string>& overrides);

}  // namespace syndistill::cli

#endif  // SYNDISTILL_TOOLS_RUN_CONFIG_H_
