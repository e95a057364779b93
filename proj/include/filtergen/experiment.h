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

// Experiment configuration and the resumable end-to-end pipeline:
// data -> train-gen -> train-disc -> estimate-uc -> sample -> sweep.

#ifndef FILTERGEN_EXPERIMENT_H_
#define FILTERGEN_EXPERIMENT_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "filtergen/scenarios.h"
#include "filtergen/sweep.h"

namespace filtergen {

// Every problem found in a configuration file.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct ExperimentConfig {
  uint64_t seed = 0;
  // Exactly one of `scenario` and `train_path` is set.
  std::string scenario;
  std::string train_path, valid_path, test_path;
  int max_len = kDefaultMaxLen;
  size_t test_samples = 2000;   // scenario mode
  size_t real_samples = 10000;  // scenario mode: real data for classifiers

  std::optional<GenConfig> generator;       // defaults to the scenario's
  std::optional<TextCNNConfig> discriminator;
  std::vector<double> c_grid = {0.2, 0.5, 0.8};
  EstimateConfig estimate;
  size_t max_attempts_per_sample = 10000;
  size_t samples = 1000;  // per stream and grid point
  std::vector<double> temperatures = {0.9, 1.0, 1.1, 1.2};
  std::vector<std::string> metrics = all_metric_names();
  int bleu_order = 5;
  std::string embedding = "ppmi-svd";  // | "neural-lm-mean"
  int embedding_dim = 64;
  std::optional<TextCNNConfig> classifier;  // "err"; defaults to discriminator
  std::string out_dir = "run";
  int workers = 1;

  nlohmann::json to_json() const;
  // Content hash of the canonical JSON form.
  std::string hash() const;
};

// Throws ConfigError listing every problem. Unknown keys are errors;
// relative data paths resolve against the config file's directory.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::string& base_dir = ".");
ExperimentConfig validate_config(const std::string& path);

struct StageRecord {
  std::string name;
  std::string key;  // checkpoint key
  bool resumed = false;
  double seconds = 0.0;
};

struct OutputRecord {
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct RunManifest {
  std::string config_hash;
  nlohmann::json versions;
  std::vector<StageRecord> stages;
  std::vector<OutputRecord> outputs;

  nlohmann::json to_json() const;
};

// A stage failed; carries the manifest up to that point.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, RunManifest partial,
             bool budget);
  const std::string& stage() const { return stage_; }
  const RunManifest& partial() const { return partial_; }
  bool budget_exhausted() const { return budget_; }

 private:
  std::string stage_;
  RunManifest partial_;
  bool budget_;
};

std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::string& path);

// Runs (or resumes) every stage under config.out_dir and writes
// manifest.json, sweep.csv and report.json there. Scenario runs also write
// oracle_report.json.
RunManifest run_pipeline(const ExperimentConfig& config);

// Exact checks of the filter on an enumerable scenario; see
// `filtergen oracle-check`.
nlohmann::json oracle_report(const Scenario& scenario,
                             const ScenarioDiscriminator& disc, double c,
                             uint64_t seed, size_t mc_samples = 200000);

}  // namespace filtergen

#endif  // FILTERGEN_EXPERIMENT_H_
