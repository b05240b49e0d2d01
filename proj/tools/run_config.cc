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

#include "run_config.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace syndistill::cli {

using ojson = nlohmann::ordered_json;

namespace {

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void check_prob(double p, const char* key) {
  check(std::isfinite(p) && p >= 0.0 && p <= 1.0, std::string(key) + " must be in [0, 1]");
}

void check_positive(double x, const char* key) {
  check(std::isfinite(x) && x > 0.0, std::string(key) + " must be positive");
}

// Re-throws library validation errors as ConfigError.
template <typename F>
void library_check(F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string kind_of(const ojson& v) {
  if (v.is_boolean()) return "a boolean";
  if (v.is_number_unsigned()) return "a non-negative integer";
  if (v.is_number_integer()) return "an integer";
  if (v.is_number()) return "a number";
  if (v.is_string()) return "a string";
  if (v.is_array()) return "a list of strings";
  return "null";
}

// True when `value` may replace `current` under key `key`.
bool same_type(const std::string& key, const ojson& current, const ojson& value) {
  if (key == "alpha") return value.is_null() || value.is_number();
  if (current.is_boolean()) return value.is_boolean();
  if (current.is_number_unsigned()) return value.is_number_unsigned();
  if (current.is_number_integer()) return value.is_number_integer();
  if (current.is_number()) return value.is_number();
  if (current.is_string()) return value.is_string();
  if (current.is_array()) {
    if (!value.is_array()) return false;
    for (const auto& x : value)
      if (!x.is_string()) return false;
    return true;
  }
  return false;
}

ojson merge_strict(ojson base, const ojson& overlay) {
  check(overlay.is_object(), "config must be a JSON object");
  for (const auto& [key, value] : overlay.items()) {
    check(base.contains(key), "unknown config key '" + key + "'");
    const std::string want = key == "alpha" ? "a number or null" : kind_of(base[key]);
    check(same_type(key, base[key], value), "config key '" + key + "' must be " + want);
    base[key] = value;
  }
  return base;
}

bool full_parse(const std::string& raw, std::size_t used) { return !raw.empty() && used == raw.size(); }

ojson parse_flag_value(const std::string& key, const ojson& current, const std::string& raw) {
  const std::string bad = "flag --" + key + ": cannot read '" + raw + "' as ";
  std::size_t used = 0;
  try {
    if (current.is_boolean()) {
      if (raw == "true") return true;
      if (raw == "false") return false;
      throw ConfigError(bad + "a boolean");
    }
    if (current.is_number_unsigned()) {
      check(raw.find('-') == std::string::npos, bad + "a non-negative integer");
      const unsigned long long v = std::stoull(raw, &used);
      check(full_parse(raw, used), bad + "a non-negative integer");
      return static_cast<std::uint64_t>(v);
    }
    if (current.is_number_integer()) {
      const long long v = std::stoll(raw, &used);
      check(full_parse(raw, used), bad + "an integer");
      return static_cast<std::int64_t>(v);
    }
    if (current.is_number() || key == "alpha") {
      const double v = std::stod(raw, &used);
      check(full_parse(raw, used), bad + "a number");
      return v;
    }
  } catch (const std::logic_error&) {
    throw ConfigError(bad + kind_of(current.is_null() ? ojson(0.0) : current));
  }
  if (current.is_array()) {
    ojson list = ojson::array();
    std::stringstream in(raw);
    for (std::string item; std::getline(in, item, ',');)
      if (!item.empty()) list.push_back(item);
    return list;
  }
  return raw;
}

std::string flag_name(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return key;
}

std::string key_name(std::string flag) {
  for (char& c : flag)
    if (c == '-') c = '_';
  return flag;
}

}  // namespace

void RunConfig::validate() const {
  library_check([&] { parse_task(task); });
  check(!out.empty(), "out must not be empty");
  check(min_count >= 1, "min_count must be at least 1");
  check(n >= 1 && n_dev >= 1 && n_test >= 1, "n, n_dev and n_test must be at least 1");
  check(max_len >= 3, "max_len must be at least 3");
  check(grammar_size >= 1, "grammar_size must be at least 1");
  check_prob(adj_prob, "adj_prob");
  check_prob(pp_prob, "pp_prob");
  check_prob(rc_prob, "rc_prob");
  check_prob(transitive_prob, "transitive_prob");
  library_check([&] { dims.validate(); });
  if (!teacher.empty()) library_check([&] { parse_teacher(teacher); });
  check(teacher_epochs >= 1 && teacher_batch >= 1, "teacher_epochs and teacher_batch must be at least 1");
  check_positive(teacher_lr, "teacher_lr");
  check(std::isfinite(structure_weight) && structure_weight >= 0.0,
        "structure_weight must be non-negative");
  library_check([&] { loss.validate(); });
  library_check([&] { schedule.validate(); });
  check_positive(lr, "lr");
  if (alpha) check_prob(*alpha, "alpha");
  check(!(alpha && no_anneal), "alpha and no_anneal both fix the annealing weight; set one");
  check(checkpoint_every >= 1, "checkpoint_every must be at least 1");
  check(probe == "dominance" || probe == "dependency" || probe == "constituent",
        "probe must be dependency, constituent or dominance");
  check(probe_epochs >= 1 && probe_batch >= 1, "probe_epochs and probe_batch must be at least 1");
  check_positive(probe_lr, "probe_lr");
  check(instances >= 1, "instances must be at least 1");
  check_positive(tolerance, "tolerance");
}

std::string RunConfig::to_json() const {
  ojson j;
  j["seed"] = seed;
  j["task"] = task;
  j["out"] = out;
  j["train"] = train;
  j["dev"] = dev;
  j["test"] = test;
  j["data"] = data;
  j["text"] = text;
  j["min_count"] = min_count;
  j["n"] = n;
  j["n_dev"] = n_dev;
  j["n_test"] = n_test;
  j["max_len"] = max_len;
  j["grammar_size"] = grammar_size;
  j["adj_prob"] = adj_prob;
  j["pp_prob"] = pp_prob;
  j["rc_prob"] = rc_prob;
  j["transitive_prob"] = transitive_prob;
  j["embed"] = dims.embed;
  j["teacher_hidden"] = dims.teacher_hidden;
  j["student_hidden"] = dims.student_hidden;
  j["teacher_layers"] = dims.teacher_layers;
  j["student_layers"] = dims.student_layers;
  j["head_width"] = dims.head_width;
  j["arc_dim"] = dims.arc_dim;
  j["span_width"] = dims.span_width;
  j["feature_dim"] = dims.feature_dim;
  j["indicator_dim"] = dims.indicator_dim;
  j["dropout"] = dims.dropout;
  j["teacher"] = teacher;
  j["teachers"] = teachers;
  j["student"] = student;
  j["structure_head"] = structure_head;
  j["teacher_epochs"] = teacher_epochs;
  j["teacher_batch"] = teacher_batch;
  j["teacher_patience"] = teacher_patience;
  j["teacher_lr"] = teacher_lr;
  j["structure_weight"] = structure_weight;
  j["mode"] = loss.mode == InjectionMode::kFeature ? "A" : "B";
  j["teacher_dist"] = loss.teacher_dist == TeacherDist::kSoft ? "soft" : "hard";
  j["eta"] = loss.eta;
  j["lambda1"] = loss.lambda1;
  j["lambda2"] = loss.lambda2;
  j["zeta"] = loss.zeta;
  j["mask_ratio"] = loss.mask_ratio;
  j["temperature"] = loss.temperature;
  j["iters"] = schedule.T;
  j["g1"] = schedule.G1;
  j["g2"] = schedule.G2;
  j["batch"] = schedule.batch;
  j["eval_every"] = schedule.eval_every;
  j["patience"] = schedule.patience;
  j["lr"] = lr;
  j["alpha"] = alpha ? ojson(*alpha) : ojson(nullptr);
  j["no_sem"] = no_sem;
  j["no_syn"] = no_syn;
  j["no_reg"] = no_reg;
  j["no_anneal"] = no_anneal;
  j["teacher_trees"] = teacher_trees;
  j["checkpoint_every"] = checkpoint_every;
  j["resume"] = resume;
  j["stop_after"] = stop_after;
  j["probe"] = probe;
  j["student_no_dep"] = student_no_dep;
  j["student_no_con"] = student_no_con;
  j["probe_epochs"] = probe_epochs;
  j["probe_batch"] = probe_batch;
  j["probe_lr"] = probe_lr;
  j["instances"] = instances;
  j["tolerance"] = tolerance;
  return j.dump(2);
}

RunConfig RunConfig::from_json(std::string_view text) {
  ojson overlay;
  try {
    overlay = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const ojson j = merge_strict(ojson::parse(RunConfig{}.to_json()), overlay);
  RunConfig c;
  c.seed = j["seed"];
  c.task = j["task"];
  c.out = j["out"];
  c.train = j["train"];
  c.dev = j["dev"];
  c.test = j["test"];
  c.data = j["data"];
  c.text = j["text"];
  c.min_count = j["min_count"];
  c.n = j["n"];
  c.n_dev = j["n_dev"];
  c.n_test = j["n_test"];
  c.max_len = j["max_len"];
  c.grammar_size = j["grammar_size"];
  c.adj_prob = j["adj_prob"];
  c.pp_prob = j["pp_prob"];
  c.rc_prob = j["rc_prob"];
  c.transitive_prob = j["transitive_prob"];
  c.dims.embed = j["embed"];
  c.dims.teacher_hidden = j["teacher_hidden"];
  c.dims.student_hidden = j["student_hidden"];
  c.dims.teacher_layers = j["teacher_layers"];
  c.dims.student_layers = j["student_layers"];
  c.dims.head_width = j["head_width"];
  c.dims.arc_dim = j["arc_dim"];
  c.dims.span_width = j["span_width"];
  c.dims.feature_dim = j["feature_dim"];
  c.dims.indicator_dim = j["indicator_dim"];
  c.dims.dropout = j["dropout"];
  c.teacher = j["teacher"];
  c.teachers = j["teachers"].get<std::vector<std::string>>();
  c.student = j["student"];
  c.structure_head = j["structure_head"];
  c.teacher_epochs = j["teacher_epochs"];
  c.teacher_batch = j["teacher_batch"];
  c.teacher_patience = j["teacher_patience"];
  c.teacher_lr = j["teacher_lr"];
  c.structure_weight = j["structure_weight"];
  const std::string mode = j["mode"];
  check(mode == "A" || mode == "B", "mode must be A or B");
  c.loss.mode = mode == "A" ? InjectionMode::kFeature : InjectionMode::kStructure;
  const std::string dist = j["teacher_dist"];
  check(dist == "soft" || dist == "hard", "teacher_dist must be soft or hard");
  c.loss.teacher_dist = dist == "soft" ? TeacherDist::kSoft : TeacherDist::kHard;
  c.loss.eta = j["eta"];
  c.loss.lambda1 = j["lambda1"];
  c.loss.lambda2 = j["lambda2"];
  c.loss.zeta = j["zeta"];
  c.loss.mask_ratio = j["mask_ratio"];
  c.loss.temperature = j["temperature"];
  c.schedule.T = j["iters"];
  c.schedule.G1 = j["g1"];
  c.schedule.G2 = j["g2"];
  c.schedule.batch = j["batch"];
  c.schedule.eval_every = j["eval_every"];
  c.schedule.patience = j["patience"];
  c.lr = j["lr"];
  if (!j["alpha"].is_null()) c.alpha = j["alpha"].get<double>();
  c.no_sem = j["no_sem"];
  c.no_syn = j["no_syn"];
  c.no_reg = j["no_reg"];
  c.no_anneal = j["no_anneal"];
  c.teacher_trees = j["teacher_trees"];
  c.checkpoint_every = j["checkpoint_every"];
  c.resume = j["resume"];
  c.stop_after = j["stop_after"];
  c.probe = j["probe"];
  c.student_no_dep = j["student_no_dep"];
  c.student_no_con = j["student_no_con"];
  c.probe_epochs = j["probe_epochs"];
  c.probe_batch = j["probe_batch"];
  c.probe_lr = j["probe_lr"];
  c.instances = j["instances"];
  c.tolerance = j["tolerance"];
  c.validate();
  return c;
}

SyntheticConfig RunConfig::synthetic() const {
  SyntheticConfig s;
  s.grammar_size = grammar_size;
  s.n_examples = n + n_dev + n_test;
  s.max_len = max_len;
  s.seed = seed;
  s.task = task_kind();
  s.adj_prob = adj_prob;
  s.pp_prob = pp_prob;
  s.rc_prob = rc_prob;
  s.transitive_prob = transitive_prob;
  return s;
}

TeacherTrainConfig RunConfig::teacher_config() const {
  TeacherTrainConfig t;
  t.max_epochs = teacher_epochs;
  t.batch = teacher_batch;
  t.patience = teacher_patience;
  t.adam.lr = teacher_lr;
  t.structure_weight = structure_weight;
  t.seed = seed;
  return t;
}

DistillOptions RunConfig::distill_options() const {
  DistillOptions o;
  o.loss = loss;
  o.schedule = schedule;
  o.adam.lr = lr;
  if (alpha) o.fixed_alpha = *alpha;
  if (no_anneal) o.fixed_alpha = 0.0;
  o.no_sem = no_sem;
  o.no_syn = no_syn;
  o.no_reg = no_reg;
  o.seed = seed;
  return o;
}

ProbeConfig RunConfig::probe_config() const {
  ProbeConfig p;
  p.epochs = probe_epochs;
  p.batch = probe_batch;
  p.adam.lr = probe_lr;
  p.seed = seed;
  return p;
}

std::string apply_overrides(const std::string& base,
                            const std::map<std::string, std::string>& overrides) {
  ojson j = ojson::parse(base);
  for (const auto& [flag, raw] : overrides) {
    const std::string key = key_name(flag);
    check(j.contains(key), "unknown flag --" + flag);
    j[key] = parse_flag_value(flag, j[key], raw);
  }
  return j.dump(2);
}

std::vector<std::pair<std::string, bool>> config_keys() {
  std::vector<std::pair<std::string, bool>> keys;
  const ojson defaults = ojson::parse(RunConfig{}.to_json());
  for (const auto& [key, value] : defaults.items())
    keys.emplace_back(flag_name(key), value.is_boolean());
  return keys;
}

RunConfig resolve_config(const std::string& config_path,
                         const std::map<std::string, std::string>& overrides) {
  std::string text = RunConfig{}.to_json();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open config file " + config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    text = RunConfig::from_json(ss.str()).to_json();
  }
  return RunConfig::from_json(apply_overrides(text, overrides));
}

}  // namespace syndistill::cli
