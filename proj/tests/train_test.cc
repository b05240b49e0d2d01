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

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "syndistill/synthetic.h"
#include "syndistill/train.h"

namespace sd = syndistill;

namespace {

struct Fixture {
  std::vector<sd::EncodedExample> train, dev;
  sd::Vocabularies vocab;
  sd::ModelDims dims;

  explicit Fixture(std::size_t n = 24, std::size_t dim = 4, sd::TaskKind task = sd::TaskKind::kClassify) {
    sd::SyntheticConfig c;
    c.n_examples = n + 8;
    c.max_len = 9;
    c.seed = 3;
    c.task = task;
    auto all = sd::gen_synthetic(c);
    std::vector<sd::Example> tr(all.begin(), all.begin() + n), dv(all.begin() + n, all.end());
    vocab = sd::Vocabularies::build(tr);
    train = sd::encode_all(tr, vocab);
    dev = sd::encode_all(dv, vocab);
    dims.embed = dims.teacher_hidden = dims.student_hidden = dims.head_width = dim;
    dims.arc_dim = dims.span_width = dims.feature_dim = dim;
    dims.indicator_dim = 2;
    dims.student_layers = 1;
  }

  std::vector<sd::Teacher> teachers() const {
    std::vector<sd::Teacher> out;
    for (auto k : sd::kAllTeachers) out.emplace_back(k, vocab, dims, true, 5);
    return out;
  }
};

std::vector<const sd::Teacher*> pointers(const std::vector<sd::Teacher>& ts) {
  std::vector<const sd::Teacher*> out;
  for (const auto& t : ts) out.push_back(&t);
  return out;
}

sd::DistillOptions small_options(std::size_t T, std::size_t G1, std::size_t G2) {
  sd::DistillOptions o;
  o.schedule.T = T;
  o.schedule.G1 = G1;
  o.schedule.G2 = G2;
  o.schedule.batch = 8;
  o.schedule.eval_every = 2;
  o.schedule.patience = 100;
  o.adam.lr = 1e-2;
  o.loss.zeta = 1e-3;
  o.seed = 9;
  return o;
}

std::vector<std::string> iteration_steps(const std::vector<std::string>& trace, std::size_t t) {
  std::vector<std::string> out;
  const std::string prefix = "t=" + std::to_string(t) + " ";
  for (const auto& s : trace)
    if (s.rfind(prefix, 0) == 0) out.push_back(s.substr(prefix.size()));
  return out;
}

}  // namespace

TEST_CASE("syntax flag toggles after multiples of G2") {
  std::vector<bool> got;
  for (std::size_t t = 1; t <= 8; ++t) got.push_back(sd::dependency_turn(t, 2));
  CHECK(got == std::vector<bool>{true, true, false, false, true, true, false, false});
  CHECK(sd::dependency_turn(128, 128));
  CHECK_FALSE(sd::dependency_turn(129, 128));
  CHECK_FALSE(sd::dependency_turn(256, 128));
  CHECK(sd::dependency_turn(257, 128));
}

TEST_CASE("schedule defaults and validation") {
  sd::Schedule s;
  CHECK(s.T == 10000);
  CHECK(s.G1 == 300);
  CHECK(s.G2 == 128);
  CHECK(s.batch == 32);
  CHECK(s.eval_every == 200);
  CHECK(s.patience == 10);
  s.G2 = 400;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.G1 = 20000;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.G2 = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("two-phase trace and frozen teachers") {
  Fixture f;
  auto ts = f.teachers();
  std::vector<std::uint64_t> before;
  for (const auto& t : ts) before.push_back(t.params().fingerprint());
  const auto cache = sd::cache_teachers(pointers(ts), f.train, f.vocab, {});
  sd::Student student(f.vocab, f.dims, 1);
  sd::RunState state;
  const auto result = sd::distill_student(student, cache, f.train, f.dev, f.vocab.classes,
                                          small_options(6, 4, 2), state);
  const std::vector<std::string> dep = {"sem", "output[treelstm-dep]+dep", "output[gcn-dep]+dep",
                                        "output[treelstm-con]", "output[gcn-con]"};
  const std::vector<std::string> con = {"sem", "output[treelstm-dep]", "output[gcn-dep]",
                                        "output[treelstm-con]+con", "output[gcn-con]+con"};
  CHECK(iteration_steps(result.trace, 1) == dep);
  CHECK(iteration_steps(result.trace, 2) == dep);
  CHECK(iteration_steps(result.trace, 3) == con);
  CHECK(iteration_steps(result.trace, 4) == con);
  CHECK(iteration_steps(result.trace, 5) == std::vector<std::string>{"all"});
  CHECK(iteration_steps(result.trace, 6) == std::vector<std::string>{"all"});
  CHECK(result.trace.size() == 22);
  CHECK(result.iterations == 6);
  for (std::size_t k = 0; k < ts.size(); ++k) CHECK(ts[k].params().fingerprint() == before[k]);
}

TEST_CASE("early visits never mix structure types") {
  Fixture f;
  auto ts = f.teachers();
  const auto cache = sd::cache_teachers(pointers(ts), f.train, f.vocab, {});
  sd::Student student(f.vocab, f.dims, 1);
  sd::RunState state;
  const auto result = sd::distill_student(student, cache, f.train, f.dev, f.vocab.classes,
                                          small_options(9, 9, 3), state);
  for (const auto& step : result.trace) {
    const bool has_dep = step.find("+dep") != std::string::npos;
    const bool has_con = step.find("+con") != std::string::npos;
    CHECK_FALSE((has_dep && has_con));
    if (has_dep) CHECK(step.find("-dep]") != std::string::npos);
    if (has_con) CHECK(step.find("-con]") != std::string::npos);
  }
}

TEST_CASE("identical seeds give bitwise identical runs") {
  Fixture f;
  auto ts = f.teachers();
  const auto cache = sd::cache_teachers(pointers(ts), f.train, f.vocab, {});
  auto run = [&](std::uint64_t seed) {
    sd::Student student(f.vocab, f.dims, 1);
    sd::RunState state;
    auto o = small_options(8, 3, 1);
    o.seed = seed;
    const auto r = sd::distill_student(student, cache, f.train, f.dev, f.vocab.classes, o, state);
    return std::make_pair(sd::Checkpoint::from_params(student.params()).serialize(),
                          r.best_dev.to_json());
  };
  const auto a = run(4), b = run(4), c = run(5);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first != c.first);
}

TEST_CASE("resume reproduces the remaining trajectory") {
  Fixture f;
  auto ts = f.teachers();
  const auto cache = sd::cache_teachers(pointers(ts), f.train, f.vocab, {});
  const auto o = small_options(10, 4, 2);

  sd::Student full(f.vocab, f.dims, 1);
  sd::RunState full_state;
  sd::RunLog full_log;
  sd::distill_student(full, cache, f.train, f.dev, f.vocab.classes, o, full_state, &full_log);

  for (std::size_t pause : {3u, 4u, 7u}) {
    sd::Student first(f.vocab, f.dims, 1);
    sd::RunState state;
    sd::distill_student(first, cache, f.train, f.dev, f.vocab.classes, o, state, nullptr, pause);
    REQUIRE(state.t == pause);
    const std::string bytes = state.to_checkpoint(first).serialize();
    const std::string meta = state.meta_json();

    sd::Student second(f.vocab, f.dims, 77);
    sd::RunState resumed =
        sd::RunState::restore(sd::Checkpoint::deserialize(bytes), meta, second);
    CHECK(resumed.t == pause);
    sd::RunLog log;
    sd::distill_student(second, cache, f.train, f.dev, f.vocab.classes, o, resumed, &log);
    CHECK(second.params().fingerprint() == full.params().fingerprint());
    CHECK(resumed.best_iteration == full_state.best_iteration);
    // The tail of the log matches the uninterrupted run.
    std::vector<double> tail_full, tail;
    for (const auto& e : full_log.entries())
      if (e.iteration > pause) tail_full.push_back(e.value);
    for (const auto& e : log.entries()) tail.push_back(e.value);
    CHECK(tail == tail_full);
  }
}

TEST_CASE("zero syntax and semantic weights degenerate to supervised training") {
  Fixture f;
  auto o = small_options(6, 2, 1);
  o.loss.lambda1 = 0.0;
  o.loss.lambda2 = 0.0;
  o.fixed_alpha = 1.0;
  // With gold-only targets the teachers must not matter at all.
  auto run = [&](std::uint64_t teacher_seed, sd::RunLog* log) {
    std::vector<sd::Teacher> ts;
    for (auto k : sd::kAllTeachers) ts.emplace_back(k, f.vocab, f.dims, true, teacher_seed);
    const auto cache = sd::cache_teachers(pointers(ts), f.train, f.vocab, {});
    sd::Student student(f.vocab, f.dims, 1);
    sd::RunState state;
    const auto r = sd::distill_student(student, cache, f.train, f.dev, f.vocab.classes, o, state, log);
    for (const auto& step : r.trace) {
      CHECK(step.find('+') == std::string::npos);
      CHECK(step.find("sem") == std::string::npos);
    }
    return student.params().fingerprint();
  };
  sd::RunLog log;
  CHECK(run(1, &log) == run(2, nullptr));
  std::size_t zeros = 0;
  for (const auto& e : log.entries()) {
    if (e.metric == "L_syn" || e.metric == "L_sem" || e.metric == "L_reg") {
      CHECK(e.value == 0.0);
      ++zeros;
    }
  }
  CHECK(zeros == 18);
}

TEST_CASE("metrics on hand fixtures") {
  SUBCASE("perfect predictions") {
    const std::vector<int> g = {0, 1, 1, 0, 2};
    const auto m = sd::classification_metrics(g, g, 3);
    CHECK(m.accuracy == 100.0);
    CHECK(m.macro_f1 == 100.0);
    CHECK(sd::token_f1(g, g, 0) == 100.0);
  }
  SUBCASE("one class on a balanced binary set") {
    const std::vector<int> gold = {0, 1, 0, 1, 0, 1, 0, 1};
    const std::vector<int> pred(8, 1);
    const auto m = sd::classification_metrics(pred, gold, 2);
    CHECK(m.accuracy == 50.0);
    CHECK(m.macro_f1 == doctest::Approx(100.0 / 3.0));
  }
  SUBCASE("ten-example confusion matrix") {
    // rows gold, cols predicted: [[2,1,0],[0,3,1],[1,0,2]]
    const std::vector<int> gold = {0, 0, 0, 1, 1, 1, 1, 2, 2, 2};
    const std::vector<int> pred = {0, 0, 1, 1, 1, 2, 1, 2, 0, 2};
    const auto m = sd::classification_metrics(pred, gold, 3);
    CHECK(m.accuracy == doctest::Approx(70.0));
    // per-class F1: 2/3, 3/4, 2/3
    CHECK(m.macro_f1 == doctest::Approx(100.0 * (2.0 / 3 + 3.0 / 4 + 2.0 / 3) / 3));
  }
  SUBCASE("token F1 ignores the outside tag") {
    const std::vector<int> gold = {0, 1, 2, 0, 3};
    const std::vector<int> pred = {0, 1, 0, 3, 3};
    CHECK(sd::token_f1(pred, gold, 0) == doctest::Approx(100.0 * 4.0 / 6.0));
    const std::vector<int> outside(4, 0);
    CHECK(sd::token_f1(outside, outside, 0) == 100.0);
  }
  CHECK_THROWS_AS(sd::classification_metrics(std::vector<int>{}, std::vector<int>{}, 2),
                  std::invalid_argument);
}

TEST_CASE("evaluation rejects empty data and reads only token ids") {
  Fixture f;
  sd::Student student(f.vocab, f.dims, 3);
  CHECK_THROWS_AS(sd::evaluate(student, {}, f.vocab.classes), std::invalid_argument);
  const auto before = sd::predict(student, f.dev);
  auto scrambled = f.dev;
  for (auto& e : scrambled) {
    e.sentence.dep = {};
    e.sentence.dep_label_ids.clear();
    e.sentence.bin = {};
    e.sentence.dep_topo = {};
    e.sentence.bin_topo = {};
    e.sentence.graph = {};
  }
  CHECK(sd::predict(student, scrambled) == before);
  const auto m1 = sd::evaluate(student, f.dev, f.vocab.classes);
  const auto m2 = sd::evaluate(student, f.dev, f.vocab.classes);
  CHECK(m1.to_json() == m2.to_json());
}

TEST_CASE("tagging and pair students produce per-task logits") {
  SUBCASE("tag") {
    Fixture f(12, 4, sd::TaskKind::kTag);
    sd::Student student(f.vocab, f.dims, 3);
    const auto pred = sd::predict(student, f.dev);
    for (std::size_t i = 0; i < pred.size(); ++i) CHECK(pred[i].size() == f.dev[i].sentence.size());
    const auto m = sd::evaluate(student, f.dev, f.vocab.classes);
    CHECK(m.task == sd::TaskKind::kTag);
    CHECK(m.token_f1 >= 0.0);
    CHECK(m.token_f1 <= 100.0);
  }
  SUBCASE("pair") {
    Fixture f(12, 4, sd::TaskKind::kPair);
    sd::Student student(f.vocab, f.dims, 3);
    const auto pred = sd::predict(student, f.dev);
    for (const auto& p : pred) CHECK(p.size() == 1);
    auto ts = f.teachers();
    const auto cache = sd::cache_teachers(pointers(ts), f.train, f.vocab, {});
    sd::RunState state;
    const auto r = sd::distill_student(student, cache, f.train, f.dev, f.vocab.classes,
                                       small_options(4, 2, 1), state);
    CHECK(r.iterations == 4);
  }
}

TEST_CASE("distillation errors") {
  Fixture f;
  auto ts = f.teachers();
  const auto cache = sd::cache_teachers(pointers(ts), f.train, f.vocab, {});
  SUBCASE("vocabulary mismatch") {
    sd::RunState state;
    sd::Vocabularies bigger = f.vocab;
    auto tokens = f.vocab.words.tokens();
    tokens.push_back("zz-extra");
    bigger.words = sd::Vocab::from_tokens(tokens);
    sd::Student wrong(bigger, f.dims, 1);
    CHECK_THROWS_AS(sd::distill_student(wrong, cache, f.train, f.dev, f.vocab.classes,
                                        small_options(4, 2, 1), state),
                    std::invalid_argument);
    sd::Teacher mismatched(sd::TeacherKind::kGcnDep, bigger, f.dims, true, 1);
    CHECK_THROWS_AS(sd::cache_teachers({&mismatched}, f.train, f.vocab, {}),
                    std::invalid_argument);
  }
  SUBCASE("teacher order") {
    CHECK_THROWS_AS(sd::cache_teachers({&ts[2], &ts[0]}, f.train, f.vocab, {}),
                    std::invalid_argument);
  }
  SUBCASE("soft targets need a structure head") {
    sd::Teacher bare(sd::TeacherKind::kGcnDep, f.vocab, f.dims, false, 1);
    CHECK_THROWS_AS(sd::cache_teachers({&bare}, f.train, f.vocab, {}), std::invalid_argument);
    sd::CacheOptions hard;
    hard.dist = sd::TeacherDist::kHard;
    CHECK_NOTHROW(sd::cache_teachers({&bare}, f.train, f.vocab, hard));
  }
  SUBCASE("non-finite loss aborts with the iteration") {
    sd::Student student(f.vocab, f.dims, 1);
    student.params().tensors().front().mutable_data()[0] = std::nanf("");
    sd::RunState state;
    try {
      sd::distill_student(student, cache, f.train, f.dev, f.vocab.classes, small_options(4, 2, 1),
                          state);
      FAIL("expected NonFiniteLoss");
    } catch (const sd::NonFiniteLoss& e) {
      CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
    }
  }
  SUBCASE("missing tree annotation") {
    sd::SyntheticConfig c;
    c.n_examples = 2;
    auto ex = sd::gen_synthetic(c);
    ex[0].sentence.con = sd::ConstTree();
    CHECK_THROWS_AS(sd::encode_example(ex[0], f.vocab), std::invalid_argument);
    ex[1].sentence.dep = {};
    CHECK_THROWS_AS(sd::encode_example(ex[1], f.vocab), std::invalid_argument);
  }
}

TEST_CASE("feature mode and teacher trees") {
  Fixture f;
  auto ts = f.teachers();
  sd::CacheOptions a;
  a.mode = sd::InjectionMode::kFeature;
  a.feature_dim = f.dims.feature_dim;
  const auto cache = sd::cache_teachers(pointers(ts), f.train, f.vocab, a);
  for (std::size_t k = 0; k < ts.size(); ++k)
    CHECK(cache.outputs[k][0].features.size() == f.train[0].sentence.size() * f.dims.feature_dim);
  sd::Student student(f.vocab, f.dims, 1);
  sd::RunState state;
  auto o = small_options(4, 2, 1);
  o.loss.mode = sd::InjectionMode::kFeature;
  CHECK_NOTHROW(sd::distill_student(student, cache, f.train, f.dev, f.vocab.classes, o, state));

  sd::CacheOptions trees;
  trees.teacher_trees = true;
  const auto tcache = sd::cache_teachers(pointers(ts), f.train, f.vocab, trees);
  for (std::size_t i = 0; i < f.train.size(); ++i) {
    const auto& tree = tcache.outputs[2][i].tree;
    CHECK_FALSE(tree.error().has_value());
    CHECK(tree.n == static_cast<int>(f.train[i].sentence.size()));
  }
}

TEST_CASE("teacher training beats the majority baseline and round-trips") {
  sd::SyntheticConfig c;
  c.n_examples = 500;
  c.max_len = 10;
  c.seed = 21;
  c.rc_prob = 0.0;
  auto all = sd::gen_synthetic(c);
  std::vector<sd::Example> tr(all.begin(), all.begin() + 400), dv(all.begin() + 400, all.end());
  const auto vocab = sd::Vocabularies::build(tr);
  const auto train = sd::encode_all(tr, vocab);
  const auto dev = sd::encode_all(dv, vocab);
  sd::ModelDims dims;
  dims.embed = dims.teacher_hidden = dims.head_width = dims.arc_dim = dims.span_width = 16;
  dims.dropout = 0.0;
  sd::Teacher teacher(sd::TeacherKind::kGcnDep, vocab, dims, false, 4);
  sd::TeacherTrainConfig cfg;
  cfg.max_epochs = 60;
  cfg.patience = 60;
  cfg.adam.lr = 1e-2;
  const auto result = sd::train_teacher(teacher, train, dev, vocab.classes, cfg);

  std::size_t ones = 0;
  for (const auto& e : dev) ones += e.label == 1;
  const double majority =
      100.0 * static_cast<double>(std::max(ones, dev.size() - ones)) / static_cast<double>(dev.size());
  MESSAGE("gcn-dep dev " << result.best_dev.accuracy << " vs majority " << majority);
  CHECK(result.best_dev.accuracy > majority + 10.0);
  CHECK(result.parameters == teacher.params().scalar_count());

  // Two GCN layers, nothing deeper.
  bool l1 = false, l2 = false;
  for (const auto& [name, t] : teacher.params().entries()) {
    l1 = l1 || name.find(".l1.") != std::string::npos;
    l2 = l2 || name.find(".l2.") != std::string::npos;
  }
  CHECK(l1);
  CHECK_FALSE(l2);

  const auto stem = (std::filesystem::temp_directory_path() / "syndistill_teacher_rt").string();
  sd::ModelMeta meta{"gcn-dep", vocab, dims, false, 4};
  sd::save_model(stem, teacher.params(), meta);
  const auto loaded_meta = sd::load_meta(stem);
  CHECK(loaded_meta.vocab == vocab);
  CHECK(loaded_meta.dims == dims);
  sd::Teacher loaded(sd::parse_teacher(loaded_meta.kind), loaded_meta.vocab, loaded_meta.dims,
                     loaded_meta.structure_head, 99);
  sd::load_params(stem, loaded.params());
  CHECK(sd::evaluate(loaded, dev, vocab.classes).accuracy == result.best_dev.accuracy);
  CHECK(loaded.params().fingerprint() == teacher.params().fingerprint());
}

TEST_CASE("tree teachers use two layers") {
  Fixture f;
  for (auto k : sd::kAllTeachers) {
    sd::Teacher t(k, f.vocab, f.dims, false, 1);
    bool l1 = false, l2 = false;
    for (const auto& [name, _] : t.params().entries()) {
      l1 = l1 || name.find(".l1.") != std::string::npos;
      l2 = l2 || name.find(".l2.") != std::string::npos;
    }
    CHECK(l1);
    CHECK_FALSE(l2);
  }
}

TEST_CASE("metadata round trips") {
  Fixture f;
  CHECK(sd::Vocabularies::from_json(f.vocab.to_json()) == f.vocab);
  CHECK(sd::ModelDims::from_json(f.dims.to_json()) == f.dims);
  sd::ModelDims bad = f.dims;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(sd::parse_teacher("treelstm-con") == sd::TeacherKind::kTreeLstmCon);
  CHECK_THROWS_AS(sd::parse_teacher("bert"), std::invalid_argument);
}
