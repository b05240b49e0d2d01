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

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.h"
#include "doctest.h"
#include "json.hpp"
#include "run_config.h"

namespace sd = syndistill;
namespace cli = syndistill::cli;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("syndistill_" + tag + "_" + std::to_string(getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "syndistill");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// One JSON line naming the error kind.
std::string error_kind(const Outcome& o) {
  REQUIRE(o.code != 0);
  REQUIRE(std::count(o.err.begin(), o.err.end(), '\n') == 1);
  return json::parse(o.err).at("error");
}

const char* kTiny =
    R"({"embed": 8, "teacher_hidden": 8, "student_hidden": 8, "student_layers": 1,
        "head_width": 8, "arc_dim": 8, "span_width": 8, "feature_dim": 8, "indicator_dim": 4,
        "dropout": 0.1, "teacher_epochs": 2, "teacher_lr": 0.01, "lr": 0.005, "zeta": 0.0001,
        "iters": 12, "g1": 4, "g2": 2, "batch": 16, "eval_every": 4, "patience": 100,
        "checkpoint_every": 5, "probe_epochs": 2})";

}  // namespace

TEST_CASE("config: defaults, round trip and key set") {
  const cli::RunConfig c;
  CHECK_NOTHROW(c.validate());
  const auto back = cli::RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  std::vector<std::string> keys;
  for (const auto& [k, boolean] : cli::config_keys()) keys.push_back(k);
  for (const char* k : {"config", "seed", "task", "mode", "eta", "lambda1", "lambda2", "zeta", "g1",
                        "g2", "iters", "batch", "out"})
    CHECK((std::string(k) == "config" || std::find(keys.begin(), keys.end(), k) != keys.end()));
  CHECK(c.loss.eta == 0.5);
  CHECK(c.loss.lambda1 == 0.6);
  CHECK(c.loss.lambda2 == 0.2);
  CHECK(c.schedule.G1 == 300);
  CHECK(c.schedule.G2 == 128);
}

TEST_CASE("config: defaults < config file < flags") {
  TempDir dir("prec");
  std::ofstream(dir / "c.json") << R"({"eta": 0.3, "iters": 500, "mode": "A"})";
  CHECK(cli::resolve_config("", {}).loss.eta == 0.5);
  const auto from_file = cli::resolve_config(dir / "c.json", {});
  CHECK(from_file.loss.eta == 0.3);
  CHECK(from_file.schedule.T == 500);
  CHECK(from_file.loss.mode == sd::InjectionMode::kFeature);
  const auto flagged = cli::resolve_config(dir / "c.json", {{"eta", "0.4"}, {"no-sem", "true"}});
  CHECK(flagged.loss.eta == 0.4);
  CHECK(flagged.schedule.T == 500);
  CHECK(flagged.no_sem);
  const auto list = cli::resolve_config("", {{"teachers", "a,b"}});
  CHECK(list.teachers == std::vector<std::string>{"a", "b"});
}

TEST_CASE("config: rejects unknown keys, wrong types and bad ranges") {
  CHECK_THROWS_AS(cli::RunConfig::from_json(R"({"etaa": 0.5})"), cli::ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(R"({"eta": "high"})"), cli::ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(R"({"iters": 2.5})"), cli::ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(R"({"iters": -1})"), cli::ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(R"([1, 2])"), cli::ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json("{not json"), cli::ConfigError);
  for (const char* bad : {R"({"eta": 1.5})", R"({"lambda1": -1})", R"({"mode": "C"})",
                          R"({"dropout": 1.2})", R"({"task": "parse"})", R"({"g1": 20, "iters": 10})",
                          R"({"alpha": 0.5, "no_anneal": true})", R"({"probe": "semantic"})",
                          R"({"lr": 0})", R"({"teacher": "cnn"})", R"({"pp_prob": 2})"})
    CHECK_THROWS_AS(cli::RunConfig::from_json(bad), cli::ConfigError);
  CHECK_THROWS_AS(cli::resolve_config("", {{"bogus", "1"}}), cli::ConfigError);
  CHECK_THROWS_AS(cli::resolve_config("", {{"seed", "1x"}}), cli::ConfigError);
  CHECK_THROWS_AS(cli::resolve_config("", {{"no-sem", "maybe"}}), cli::ConfigError);
}

TEST_CASE("config: annealing switches") {
  CHECK(!cli::RunConfig{}.distill_options().fixed_alpha);
  CHECK(*cli::RunConfig::from_json(R"({"no_anneal": true})").distill_options().fixed_alpha == 0.0);
  CHECK(*cli::RunConfig::from_json(R"({"alpha": 1})").distill_options().fixed_alpha == 1.0);
  const auto o = cli::RunConfig::from_json(R"({"no_sem": true, "no_syn": true, "no_reg": true})")
                     .distill_options();
  CHECK((o.no_sem && o.no_syn && o.no_reg));
}

TEST_CASE("cli: gen-data is deterministic and records its config") {
  TempDir dir("gen");
  const auto a = run({"gen-data", "--seed", "7", "--n", "1000", "--out", dir / "a"});
  const auto b = run({"gen-data", "--seed", "7", "--n", "1000", "--out", dir / "b"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl", "config.resolved.json"}) {
    CHECK(!slurp(dir / (std::string("a/") + f)).empty());
    if (std::string(f) != "config.resolved.json")
      CHECK(slurp(dir / (std::string("a/") + f)) == slurp(dir / (std::string("b/") + f)));
  }
  CHECK(sd::load_jsonl(dir / "a/train.jsonl").size() == 1000);
  // The resolved config alone reproduces the run.
  const auto c = run({"gen-data", "--config", dir / "a/config.resolved.json", "--out", dir / "c"});
  REQUIRE(c.code == 0);
  CHECK(slurp(dir / "a/train.jsonl") == slurp(dir / "c/train.jsonl"));
  const auto d = run({"gen-data", "--seed", "8", "--n", "1000", "--out", dir / "d"});
  CHECK(slurp(dir / "a/train.jsonl") != slurp(dir / "d/train.jsonl"));
}

TEST_CASE("cli: errors are one machine-readable line with nonzero exit") {
  TempDir dir("err");
  CHECK(error_kind(run({"gen-data", "--bogus"})) == "usage");
  CHECK(error_kind(run({})) == "usage");
  CHECK(error_kind(run({"gen-data", "--eta", "2", "--out", dir / "o"})) == "config");
  CHECK(error_kind(run({"gen-data", "--iters", "ten", "--out", dir / "o"})) == "config");
  CHECK(error_kind(run({"gen-data", "--config", dir / "missing.json"})) == "io");
  CHECK(error_kind(run({"train-teacher", "--teacher", "gcn-dep", "--train", dir / "none.jsonl",
                        "--out", dir / "o"})) == "io");
  CHECK(error_kind(run({"train-teacher", "--train", dir / "none.jsonl", "--out", dir / "o"})) ==
        "config");
  CHECK(error_kind(run({"distill", "--teachers", dir / "nope", "--out", dir / "o"})) == "io");
  std::ofstream(dir / "bad.jsonl") << "{\"tokens\": [\"a\"]}\n";
  CHECK(error_kind(run({"eval", "--data", dir / "bad.jsonl", "--teachers", dir / "nope", "--out",
                        dir / "o"})) == "data");
}

TEST_CASE("cli: teachers, distillation, resume, evaluation, probes and induction") {
  TempDir dir("pipe");
  std::ofstream(dir / "tiny.json") << kTiny;
  const std::string cfg = dir / "tiny.json";
  REQUIRE(run({"gen-data", "--n", "60", "--n-dev", "20", "--n-test", "20", "--seed", "3", "--out",
               dir / "data"})
              .code == 0);
  const std::vector<std::string> data = {"--train", dir / "data/train.jsonl", "--dev",
                                         dir / "data/dev.jsonl", "--test", dir / "data/test.jsonl"};
  auto with_data = [&](std::vector<std::string> args) {
    args.insert(args.end(), data.begin(), data.end());
    return run(args);
  };
  std::string stems;
  for (const char* t : {"gcn-con", "treelstm-dep", "gcn-dep", "treelstm-con"}) {
    const auto r = with_data({"train-teacher", "--config", cfg, "--teacher", t, "--out", dir / "t"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(json::parse(r.out).at("teacher") == t);
    stems += (stems.empty() ? "" : ",") + dir / ("t/" + std::string(t));
  }

  SUBCASE("zero syntax and semantic weights log zero losses") {
    const auto r = with_data({"distill", "--config", cfg, "--teachers", stems, "--lambda1", "0",
                              "--lambda2", "0", "--out", dir / "z"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    std::stringstream log(slurp(dir / "z/run.log.jsonl"));
    std::size_t zeros = 0;
    for (std::string line; std::getline(log, line);) {
      const auto e = json::parse(line);
      if (e["metric"] == "L_syn" || e["metric"] == "L_sem") {
        CHECK(e["value"].get<double>() == 0.0);
        ++zeros;
      }
    }
    CHECK(zeros == 24);
  }

  SUBCASE("paused and resumed runs match an uninterrupted one") {
    const std::vector<std::string> base = {"distill", "--config", cfg, "--teachers", stems};
    auto go = [&](std::vector<std::string> extra) {
      std::vector<std::string> a = base;
      a.insert(a.end(), extra.begin(), extra.end());
      return with_data(a);
    };
    REQUIRE(go({"--out", dir / "full"}).code == 0);
    CHECK(json::parse(go({"--out", dir / "part", "--stop-after", "7"}).out).at("paused_at") == 7);
    CHECK(error_kind(go({"--out", dir / "part", "--resume", "--eta", "0.1"})) == "config");
    REQUIRE(go({"--out", dir / "part", "--resume"}).code == 0);
    CHECK(slurp(dir / "full/student.syd") == slurp(dir / "part/student.syd"));
    CHECK(slurp(dir / "full/run.log.jsonl") == slurp(dir / "part/run.log.jsonl"));
    REQUIRE(go({"--out", dir / "again"}).code == 0);
    CHECK(slurp(dir / "full/student.syd") == slurp(dir / "again/student.syd"));
    CHECK(slurp(dir / "full/result.json") == slurp(dir / "again/result.json"));
    CHECK(error_kind(go({"--out", dir / "fresh", "--resume"})) == "io");

    const auto ev = run({"eval", "--student", dir / "full/student", "--data", dir / "data/test.jsonl",
                         "--out", dir / "ev"});
    REQUIRE(ev.code == 0);
    CHECK(json::parse(ev.out).at("examples") == 20);

    const auto dep = with_data({"probe", "--config", cfg, "--student", dir / "full/student",
                                "--probe", "dependency", "--out", dir / "p"});
    REQUIRE_MESSAGE(dep.code == 0, dep.err);
    CHECK(json::parse(dep.out).at("probe") == "dependency");
    REQUIRE(go({"--out", dir / "nodep", "--eta", "0"}).code == 0);
    REQUIRE(go({"--out", dir / "nocon", "--eta", "1"}).code == 0);
    const auto dom = with_data({"probe", "--student", dir / "full/student", "--student-no-dep",
                                dir / "nodep/student", "--student-no-con", dir / "nocon/student",
                                "--probe", "dominance", "--out", dir / "p"});
    REQUIRE_MESSAGE(dom.code == 0, dom.err);
    CHECK(json::parse(dom.out).at("examples") == 20);
    const std::string csv = slurp(dir / "p/dominance_hist.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);

    const auto two = run({"induce", "--student", dir / "full/student", "--text", "the dog", "--out",
                          dir / "i"});
    REQUIRE(two.code == 0);
    std::stringstream lines(slurp(dir / "i/induced.txt"));
    std::vector<std::string> trees;
    for (std::string line; std::getline(lines, line);)
      if (!line.empty() && line[0] == '(') trees.push_back(line);
    REQUIRE(trees.size() == 1);
    CHECK(std::count(trees[0].begin(), trees[0].end(), '(') == 3);
    CHECK(two.out.find("heads: ") != std::string::npos);
    const auto many = run({"induce", "--student", dir / "full/student", "--data",
                           dir / "data/dev.jsonl", "--out", dir / "i"});
    REQUIRE(many.code == 0);
    CHECK(std::count(many.out.begin(), many.out.end(), '(') > 20);
  }
}

TEST_CASE("cli: gradcheck exits zero on success and nonzero on failure") {
  TempDir dir("gc");
  const auto ok = run({"gradcheck", "--instances", "2", "--out", dir / "a"});
  CHECK(ok.code == 0);
  CHECK(std::count(ok.out.begin(), ok.out.end(), '\n') == 14);
  const auto bad = run({"gradcheck", "--instances", "2", "--tolerance", "1e-30", "--out", dir / "b"});
  CHECK(bad.code == 1);
}
