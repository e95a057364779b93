// Copyright 2026 The filtergen Authors.
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

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "filtergen/experiment.h"

namespace fs = std::filesystem;
using namespace filtergen;
using nlohmann::json;

namespace {

std::vector<std::string> errors_of(const json& j, const std::string& base = ".") {
  try {
    parse_config(j, base);
  } catch (const ConfigError& e) {
    return e.errors();
  }
  return {};
}

bool has(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) {
    return s.find(needle) != std::string::npos;
  });
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("filtergen_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

json small_run(const fs::path& out, const std::string& scenario,
               std::vector<double> c) {
  return {{"seed", 3},
          {"scenario", scenario},
          {"data", {{"test_samples", 300}, {"real_samples", 1000}}},
          {"filter", {{"c", c}, {"estimate", {{"samples_per_round", 200}, {"rounds", 30}}}}},
          {"sweep",
           {{"temperatures", {1.0}},
            {"metrics", {"bleu", "selfbleu", "lm", "fed"}},
            {"samples", 200}}},
          {"out_dir", out.string()}};
}

}  // namespace

TEST_CASE("missing seed is reported") {
  CHECK(errors_of({{"scenario", "s2"}}) == std::vector<std::string>{"seed required"});
}

TEST_CASE("zero temperature is reported") {
  const auto e = errors_of({{"seed", 1}, {"scenario", "s2"}, {"sweep", {{"temperatures", {1.0, 0.0}}}}});
  CHECK(e == std::vector<std::string>{"temperature must be > 0"});
}

TEST_CASE("all problems are collected together") {
  const auto e = errors_of({{"scenario", "s9"},
                            {"colour", 1},
                            {"filter", {{"c", {1.5}}, {"bogus", true}}},
                            {"sweep", {{"metrics", {"bleu", "rlm"}}, {"samples", 10}}}});
  CHECK(has(e, "seed required"));
  CHECK(has(e, "colour"));
  CHECK(has(e, "bogus"));
  CHECK(has(e, "scenario"));
  CHECK(has(e, "c must be in (0, 1]"));
  CHECK(has(e, "rlm"));
  CHECK(e.size() >= 6);
}

TEST_CASE("referenced files must exist") {
  const auto e = errors_of({{"seed", 1}, {"data", {{"train", "nope.txt"}, {"test", "nope2.txt"}}}},
                           "/nonexistent");
  CHECK(has(e, "file not found: /nonexistent/nope.txt"));
  CHECK(has(e, "file not found: /nonexistent/nope2.txt"));
  CHECK(has(errors_of({{"seed", 1}}), "exactly one of"));
}

TEST_CASE("nested model configs are strict") {
  CHECK(!errors_of({{"seed", 1}, {"scenario", "s2"}, {"generator", {{"kind", "ngram"}, {"ordr", 2}}}}).empty());
  CHECK(!errors_of({{"seed", 1}, {"scenario", "s2"}, {"discriminator", {{"kernal", 2}}}}).empty());
}

TEST_CASE("bundled s2 config parses with defaults filled") {
  const ExperimentConfig c =
      validate_config(std::string(FILTERGEN_SOURCE_DIR) + "/configs/s2.json");
  CHECK(c.seed == 1);
  CHECK(c.scenario == "s2");
  CHECK(c.estimate.samples_per_round == 1000);
  CHECK(c.estimate.rounds == 100);
  CHECK(c.max_attempts_per_sample == 10000);
  CHECK(c.workers == 1);
  CHECK(c.embedding == "ppmi-svd");
  CHECK(c.temperatures == std::vector<double>{0.9, 1.0, 1.1, 1.2});
  // Canonical JSON round trip keeps the hash.
  CHECK(parse_config(c.to_json()).hash() == c.hash());
  CHECK(validate_config(std::string(FILTERGEN_SOURCE_DIR) + "/configs/s1.json").scenario == "s1");
}

TEST_CASE("unreadable or malformed files are config errors") {
  CHECK_THROWS_AS(validate_config("/nonexistent/config.json"), ConfigError);
  const fs::path d = fresh_dir("bad_config");
  std::ofstream(d / "bad.json") << "{ not json";
  CHECK_THROWS_AS(validate_config((d / "bad.json").string()), ConfigError);
}

TEST_CASE("sha256 digests") {
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("s1 end to end passes the oracle checks and lists every output") {
  const fs::path out = fresh_dir("pipeline_s1");
  const RunManifest m = run_pipeline(parse_config(small_run(out, "s1", {0.4})));
  const json oracle = load_json((out / "oracle_report.json").string());
  CHECK(oracle["passed"] == true);
  for (const auto& inv : oracle["reports"][0]["invariants"]) {
    CHECK_MESSAGE(inv["passed"] == true, inv["name"]);
  }
  std::vector<std::string> names;
  for (const auto& s : m.stages) names.push_back(s.name);
  CHECK(names == std::vector<std::string>{"data", "train-gen", "train-disc", "estimate-uc",
                                          "sample", "oracle", "sweep"});
  for (const char* f : {"sweep.csv", "report.json", "oracle_report.json", "samples/baseline.txt"}) {
    CHECK(std::any_of(m.outputs.begin(), m.outputs.end(),
                      [&](const OutputRecord& o) { return o.path == f; }));
  }
  for (const auto& o : m.outputs) CHECK(o.sha256 == file_sha256((out / o.path).string()));
  const json manifest = load_json((out / "manifest.json").string());
  CHECK(manifest["config_hash"] == m.config_hash);
}

TEST_CASE("deleting the report recomputes only the final stage") {
  const fs::path out = fresh_dir("pipeline_resume");
  const ExperimentConfig cfg = parse_config(small_run(out, "s2", {0.5}));
  run_pipeline(cfg);
  const std::string csv = slurp(out / "sweep.csv");
  const RunManifest again = run_pipeline(cfg);
  for (const auto& s : again.stages) CHECK_MESSAGE(s.resumed, s.name);
  fs::remove(out / "report.json");
  const RunManifest third = run_pipeline(cfg);
  for (const auto& s : third.stages) {
    CHECK_MESSAGE(s.resumed == (s.name != "sweep"), s.name);
  }
  CHECK(slurp(out / "sweep.csv") == csv);
}

TEST_CASE("identity filter rows repeat the baseline") {
  const fs::path out = fresh_dir("pipeline_identity");
  run_pipeline(parse_config(small_run(out, "s2", {1.0})));
  std::istringstream csv(slurp(out / "sweep.csv"));
  std::string header, base, acc;
  std::getline(csv, header);
  std::getline(csv, base);
  std::getline(csv, acc);
  REQUIRE(base.rfind("1,1,baseline,", 0) == 0);
  REQUIRE(acc.rfind("1,1,accepted,", 0) == 0);
  CHECK(base.substr(base.find("baseline,") + 9) == acc.substr(acc.find("accepted,") + 9));
}

TEST_CASE("text corpora run through the pipeline") {
  const fs::path d = fresh_dir("pipeline_text");
  {
    std::ofstream train(d / "train.txt"), test(d / "test.txt");
    Rng rng(1);
    const std::vector<std::string> words = {"the", "cat", "dog", "sat", "ran", "on", "mat"};
    for (int i = 0; i < 600; ++i) {
      std::ostream& o = i < 500 ? static_cast<std::ostream&>(train) : test;
      const int n = 2 + static_cast<int>(rng.below(5));
      for (int k = 0; k < n; ++k) o << (k ? " " : "") << words[rng.below(words.size())];
      o << "\n";
    }
  }
  const json cfg = {{"seed", 2},
                    {"data", {{"train", "train.txt"}, {"test", "test.txt"}, {"max_len", 8}}},
                    {"discriminator", {{"embed_dim", 8}, {"kernels", {4, 4}}, {"learning_rate", 0.05},
                                       {"batch_size", 64}, {"max_epochs", 3}}},
                    {"filter", {{"c", {0.5}}, {"estimate", {{"samples_per_round", 100}, {"rounds", 20}}}}},
                    {"sweep", {{"temperatures", {1.0}}, {"metrics", {"bleu", "lm", "fed"}}, {"samples", 100}}},
                    {"out_dir", "out"}};
  const ExperimentConfig c = parse_config(cfg, d.string());
  CHECK(c.out_dir == (d / "out").string());
  const RunManifest m = run_pipeline(c);
  CHECK(fs::exists(d / "out" / "sweep.csv"));
  CHECK_FALSE(fs::exists(d / "out" / "oracle_report.json"));
  CHECK(std::none_of(m.stages.begin(), m.stages.end(),
                     [](const StageRecord& s) { return s.name == "oracle"; }));
}

TEST_CASE("stage failures carry the stage name") {
  const fs::path out = fresh_dir("pipeline_budget");
  json cfg = small_run(out, "s2", {0.5});
  cfg["filter"]["max_attempts"] = 1;
  try {
    run_pipeline(parse_config(cfg));
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "sample");
    CHECK(e.budget_exhausted());
    CHECK(e.partial().stages.size() == 4);
  }
}
