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

#include "commands.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "syndistill/checkpoint.h"
#include "syndistill/gradsuite.h"
#include "syndistill/structures.h"

namespace syndistill::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string path_in(const RunConfig& c, const std::string& name) {
  return (fs::path(c.out) / name).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("cannot write " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void prepare_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw IoError("cannot create output directory " + c.out + ": " + ec.message());
}

void write_resolved(const RunConfig& c) {
  write_file(path_in(c, "config.resolved.json"), c.to_json() + "\n");
}

const std::string& required(const std::string& value, const std::string& key) {
  if (value.empty()) throw ConfigError("--" + key + " is required for this command");
  return value;
}

std::vector<Example> load_examples(const std::string& path, const std::string& key) {
  required(path, key);
  if (!fs::exists(path)) throw IoError("missing file " + path);
  return load_jsonl(path);
}

void require_model(const std::string& stem) {
  for (const char* ext : {".syd", ".json"})
    if (!fs::exists(stem + ext)) throw IoError("missing file " + stem + ext);
}

std::unique_ptr<Teacher> load_teacher(const std::string& stem) {
  require_model(stem);
  const ModelMeta meta = load_meta(stem);
  auto t = std::make_unique<Teacher>(parse_teacher(meta.kind), meta.vocab, meta.dims,
                                     meta.structure_head, meta.seed);
  load_params(stem, t->params());
  return t;
}

struct LoadedStudent {
  ModelMeta meta;
  std::unique_ptr<Student> model;
};

LoadedStudent load_student(const std::string& stem) {
  require_model(stem);
  LoadedStudent s{load_meta(stem), nullptr};
  if (s.meta.kind != "student") throw ConfigError(stem + " holds a " + s.meta.kind + ", not a student");
  s.model = std::make_unique<Student>(s.meta.vocab, s.meta.dims, s.meta.seed);
  load_params(stem, s.model->params());
  return s;
}

std::vector<EncodedExample> encode_for(const std::vector<Example>& data, const Vocabularies& v) {
  return encode_all(data, v);
}

// ---- gen-data -------------------------------------------------------------

int gen_data(const RunConfig& c, std::ostream& out) {
  const auto all = gen_synthetic(c.synthetic());
  const auto a = all.begin();
  const std::vector<Example> train(a, a + c.n), dev(a + c.n, a + c.n + c.n_dev),
      test(a + c.n + c.n_dev, all.end());
  save_jsonl(train, path_in(c, "train.jsonl"));
  save_jsonl(dev, path_in(c, "dev.jsonl"));
  save_jsonl(test, path_in(c, "test.jsonl"));
  out << json{{"train", train.size()}, {"dev", dev.size()}, {"test", test.size()}}.dump() << "\n";
  return 0;
}

// ---- train-teacher --------------------------------------------------------

int train_teacher_cmd(const RunConfig& c, std::ostream& out) {
  const TeacherKind kind = parse_teacher(required(c.teacher, "teacher"));
  const auto train = load_examples(c.train, "train");
  const auto dev = load_examples(c.dev, "dev");
  const Vocabularies vocab = Vocabularies::build(train, c.min_count);
  if (vocab.task != c.task_kind()) throw ConfigError("training data does not match --task " + c.task);
  const auto etrain = encode_for(train, vocab), edev = encode_for(dev, vocab);
  Teacher teacher(kind, vocab, c.dims, c.structure_head, c.seed);
  const std::string name(teacher_name(kind));
  RunLog log(path_in(c, name + ".log.jsonl"));
  const auto r = train_teacher(teacher, etrain, edev, vocab.outputs(), c.teacher_config(), &log);
  save_model(path_in(c, name), teacher.params(),
             ModelMeta{name, vocab, c.dims, c.structure_head, c.seed});
  json report{{"teacher", name},
              {"epochs", r.epochs},
              {"parameters", r.parameters},
              {"dev", json::parse(r.best_dev.to_json())}};
  if (!c.test.empty())
    report["test"] = json::parse(evaluate(teacher, encode_for(load_examples(c.test, "test"), vocab),
                                          vocab.outputs())
                                     .to_json());
  out << report.dump() << "\n";
  return 0;
}

// ---- distill --------------------------------------------------------------

// Keeps run-log lines up to iteration t; later ones are replayed on resume.
void truncate_log(const std::string& path, std::size_t t) {
  if (!fs::exists(path)) return;
  std::stringstream in(read_file(path));
  std::string kept;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    if (json::parse(line).at("iteration").get<std::size_t>() <= t) kept += line + "\n";
  }
  write_file(path, kept);
}

std::string comparable(RunConfig c) {
  c.resume = false;
  c.stop_after = 0;
  return c.to_json();
}

int distill_cmd(const RunConfig& c, std::ostream& out) {
  if (c.teachers.empty()) throw ConfigError("--teachers is required for this command");
  std::vector<std::unique_ptr<Teacher>> owned;
  for (const auto& stem : c.teachers) owned.push_back(load_teacher(stem));
  std::stable_sort(owned.begin(), owned.end(), [](const auto& a, const auto& b) {
    return static_cast<int>(a->kind()) < static_cast<int>(b->kind());
  });
  const Vocabularies vocab = load_meta(c.teachers.front()).vocab;
  if (vocab.task != c.task_kind()) throw ConfigError("teachers were trained for another task than --task " + c.task);
  std::vector<const Teacher*> teachers;
  for (const auto& t : owned) teachers.push_back(t.get());

  const auto etrain = encode_for(load_examples(c.train, "train"), vocab);
  const auto edev = encode_for(load_examples(c.dev, "dev"), vocab);
  CacheOptions co;
  co.mode = c.loss.mode;
  co.dist = c.loss.teacher_dist;
  co.teacher_trees = c.teacher_trees;
  co.feature_dim = c.dims.feature_dim;
  co.projection_seed = c.seed;
  const TeacherCache cache = cache_teachers(teachers, etrain, vocab, co);

  Student student(vocab, c.dims, c.seed);
  const std::string state_ckpt = path_in(c, "state.syd"), state_meta = path_in(c, "state.json");
  const std::string log_path = path_in(c, "run.log.jsonl");
  RunState state;
  if (c.resume) {
    const std::string resolved = path_in(c, "config.resolved.json");
    if (!fs::exists(resolved) || !fs::exists(state_ckpt) || !fs::exists(state_meta))
      throw IoError("nothing to resume in " + c.out);
    if (comparable(RunConfig::from_json(read_file(resolved))) != comparable(c))
      throw ConfigError("resume settings differ from the interrupted run in " + resolved);
    state = RunState::restore(Checkpoint::read(state_ckpt), read_file(state_meta), student);
    truncate_log(log_path, state.t);
  }
  write_resolved(c);
  RunLog log(log_path, c.resume);
  const DistillOptions options = c.distill_options();
  while (!state.finished) {
    if (c.stop_after > 0 && state.t >= c.stop_after) {
      out << json{{"paused_at", state.t}}.dump() << "\n";
      return 0;
    }
    std::size_t stop = std::min(state.t + c.checkpoint_every, c.schedule.T);
    if (c.stop_after > 0) stop = std::min(stop, c.stop_after);
    distill_student(student, cache, etrain, edev, vocab.outputs(), options, state, &log, stop);
    state.to_checkpoint(student).write(state_ckpt);
    write_file(state_meta, state.meta_json());
  }
  save_model(path_in(c, "student"), student.params(),
             ModelMeta{"student", vocab, c.dims, false, c.seed});
  const Metrics dev_metrics = evaluate(student, edev, vocab.outputs());
  json report{{"best_iteration", state.best_iteration},
              {"iterations", state.t},
              {"skipped_steps", state.adam.skipped},
              {"dev", json::parse(dev_metrics.to_json())}};
  if (!c.test.empty())
    report["test"] = json::parse(
        evaluate(student, encode_for(load_examples(c.test, "test"), vocab), vocab.outputs()).to_json());
  write_file(path_in(c, "result.json"), report.dump(2) + "\n");
  out << report.dump() << "\n";
  return 0;
}

// ---- eval -----------------------------------------------------------------

int eval_cmd(const RunConfig& c, std::ostream& out) {
  const std::string& path = c.data.empty() ? c.test : c.data;
  const auto data = load_examples(path, "data");
  Metrics m;
  if (!c.student.empty()) {
    if (!c.teachers.empty()) throw ConfigError("give either --student or --teachers to eval, not both");
    const auto s = load_student(c.student);
    m = evaluate(*s.model, encode_for(data, s.meta.vocab), s.meta.vocab.outputs());
  } else {
    if (c.teachers.size() != 1) throw ConfigError("eval needs --student or exactly one --teachers stem");
    const auto t = load_teacher(c.teachers.front());
    const Vocabularies vocab = load_meta(c.teachers.front()).vocab;
    m = evaluate(*t, encode_for(data, vocab), vocab.outputs());
  }
  write_file(path_in(c, "metrics.json"), m.to_json() + "\n");
  out << m.to_json() << "\n";
  return 0;
}

// ---- probe ----------------------------------------------------------------

int probe_cmd(const RunConfig& c, std::ostream& out) {
  const auto full = load_student(required(c.student, "student"));
  const auto& vocab = full.meta.vocab;
  if (c.probe == "dominance") {
    const auto test = encode_for(load_examples(c.test.empty() ? c.data : c.test, "test"), vocab);
    const auto no_dep = load_student(required(c.student_no_dep, "student-no-dep"));
    const auto no_con = load_student(required(c.student_no_con, "student-no-con"));
    auto scores = [&](const Student& s) { return example_scores(predict(s, test), test); };
    const auto summary = DominanceSummary::of(
        dominance_scores(scores(*full.model), scores(*no_dep.model), scores(*no_con.model)));
    write_file(path_in(c, "dominance.json"), summary.to_json() + "\n");
    write_file(path_in(c, "dominance_hist.csv"), summary.histogram_csv());
    out << summary.to_json() << "\n";
    return 0;
  }
  const ProbeKind kind = parse_probe(c.probe);
  const auto train = encode_for(load_examples(c.train, "train"), vocab);
  const auto test = encode_for(load_examples(c.test, "test"), vocab);
  const ProbeResult r = probe_student(*full.model, kind, train, test, vocab, c.probe_config());
  write_file(path_in(c, "probe_" + c.probe + ".json"), r.to_json() + "\n");
  out << r.to_json() << "\n";
  return 0;
}

// ---- induce ---------------------------------------------------------------

std::vector<std::vector<std::string>> induce_inputs(const RunConfig& c) {
  std::vector<std::vector<std::string>> sentences;
  if (!c.text.empty()) {
    if (!c.data.empty()) throw ConfigError("give either --text or --data to induce, not both");
    std::stringstream lines(c.text);
    for (std::string line; std::getline(lines, line);) {
      std::stringstream words(line);
      std::vector<std::string> tokens;
      for (std::string w; words >> w;) tokens.push_back(w);
      if (!tokens.empty()) sentences.push_back(std::move(tokens));
    }
  } else {
    for (const auto& e : load_examples(c.data, "data")) sentences.push_back(e.sentence.sentence.tokens);
  }
  if (sentences.empty()) throw ConfigError("no sentences to induce");
  return sentences;
}

template <typename T>
std::string joined(const std::vector<T>& xs) {
  std::ostringstream s;
  for (std::size_t i = 0; i < xs.size(); ++i) s << (i ? " " : "") << xs[i];
  return s.str();
}

int induce_cmd(const RunConfig& c, std::ostream& out) {
  const auto s = load_student(required(c.student, "student"));
  const Vocabularies& vocab = s.meta.vocab;
  std::mt19937_64 rng(c.seed);
  std::string dump;
  for (const auto& tokens : induce_inputs(c)) {
    std::vector<int> ids;
    for (const auto& w : tokens) ids.push_back(vocab.words.id(w));
    const T32 reps = Student::sentence_reps(s.model->encode({&ids}, false, rng), 0);
    const int n = static_cast<int>(tokens.size());

    // Best projective tree, then the best label at each chosen head.
    const ArcScores<float> arcs = s.model->arcs(reps);
    const std::vector<double> arc_scores(arcs.arcs.data().begin(), arcs.arcs.data().end());
    const std::vector<int> heads = eisner(arc_scores, n).heads;
    const T32 label_scores = label_logits(arcs, std::span<const int>(heads));
    std::vector<std::string> labels;
    for (int i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t l = 1; l < label_scores.cols(); ++l)
        if (label_scores.at(i, l) > label_scores.at(i, best)) best = l;
      labels.push_back(vocab.dep_labels.label(static_cast<int>(best)));
    }
    const ChartResult chart = cyk_max(to_span_scores(s.model->spans(reps), n));
    const std::string tree = render_bintree(chart.tree, vocab.span_labels, tokens);
    const std::string block = tree + "\nheads: " + joined(heads) + "\nlabels: " + joined(labels) + "\n\n";
    dump += block;
    out << block;
  }
  write_file(path_in(c, "induced.txt"), dump);
  return 0;
}

// ---- gradcheck ------------------------------------------------------------

int gradcheck_cmd(const RunConfig& c, std::ostream& out) {
  GradSuiteConfig g;
  g.instances = c.instances;
  g.tolerance = c.tolerance;
  g.seed = c.seed;
  json all = json::array();
  bool ok = true;
  for (const auto& e : run_gradient_suite(g)) {
    json line{{"name", e.name},
              {"instances", e.instances},
              {"failures", e.failures},
              {"worst_rel_err", e.worst_rel_err},
              {"worst_input", e.worst_input},
              {"passed", e.passed()}};
    out << line.dump() << "\n";
    all.push_back(line);
    ok = ok && e.passed();
  }
  write_file(path_in(c, "gradcheck.json"), all.dump(2) + "\n");
  return ok ? 0 : 1;
}

std::string error_line(const std::string& kind, const std::string& message) {
  return json{{"error", kind}, {"message", message}}.dump();
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gen-data", "train-teacher", "distill", "eval",
                                              "probe",    "induce",        "gradcheck"};
  return names;
}

int run_command(const std::string& command, const RunConfig& c, std::ostream& out) {
  prepare_out(c);
  if (command != "distill") write_resolved(c);
  if (command == "gen-data") return gen_data(c, out);
  if (command == "train-teacher") return train_teacher_cmd(c, out);
  if (command == "distill") return distill_cmd(c, out);
  if (command == "eval") return eval_cmd(c, out);
  if (command == "probe") return probe_cmd(c, out);
  if (command == "induce") return induce_cmd(c, out);
  if (command == "gradcheck") return gradcheck_cmd(c, out);
  throw ConfigError("unknown command " + command);
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, std::string> help{
      {"gen-data", "Write synthetic train/dev/test JSONL"},
      {"train-teacher", "Train one teacher encoder"},
      {"distill", "Distill teachers into the sequential student"},
      {"eval", "Print task metrics of a saved model"},
      {"probe", "Run a syntactic probe or the dominance analysis"},
      {"induce", "Decode trees from a student's structure heads"},
      {"gradcheck", "Run the finite-difference gradient suite"}};
  CLI::App app("Structure distillation into a sequential student", "syndistill");
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, std::string> raw;
  std::map<std::string, bool> flags;
  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config_path, "JSON config file");
    for (const auto& [key, boolean] : config_keys()) {
      if (boolean)
        sub->add_flag_callback("--" + key, [&flags, key = key] { flags[key] = true; });
      else
        sub->add_option_function<std::string>("--" + key,
                                              [&raw, key = key](const std::string& v) { raw[key] = v; });
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << error_line("usage", e.what()) << "\n";
    return 2;
  }
  try {
    for (const auto& [key, on] : flags) raw[key] = on ? "true" : "false";
    const RunConfig config = resolve_config(config_path, raw);
    return run_command(app.get_subcommands().front()->get_name(), config, out);
  } catch (const ConfigError& e) {
    err << error_line("config", e.what()) << "\n";
  } catch (const IoError& e) {
    err << error_line("io", e.what()) << "\n";
  } catch (const DataError& e) {
    err << error_line("data", e.what()) << "\n";
  } catch (const CheckpointError& e) {
    err << error_line("checkpoint", e.what()) << "\n";
  } catch (const std::invalid_argument& e) {
    err << error_line("invalid", e.what()) << "\n";
  } catch (const std::exception& e) {
    err << error_line("runtime", e.what()) << "\n";
  }
  return 2;
}

}  // namespace syndistill::cli
