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

// Bundled synthetic scenarios: a known Markov source, a generator that
// approximates it, and the discriminator used to filter the generator.

#ifndef FILTERGEN_SCENARIOS_H_
#define FILTERGEN_SCENARIOS_H_

#include <optional>
#include <string>
#include <vector>

#include "filtergen/disc.h"
#include "filtergen/models.h"
#include "filtergen/oracle.h"

namespace filtergen {

struct ScenarioSpec {
  std::string id;
  std::string description;
  MarkovSource source;
  // Exact generator; when absent the generator is trained on
  // `train_samples` draws from the source.
  std::optional<MarkovSource> generator_source;
  GenConfig generator;
  int train_samples = 5000;
  // "optimal" (D*) or "textcnn".
  std::string discriminator = "textcnn";
  TextCNNConfig disc;
  int disc_real_samples = 20000;
  std::vector<double> c_grid = {0.2, 0.5, 0.8};
  int length_buckets = 0;  // > 0 enables the prefix-length analysis

  static ScenarioSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Ids of the scenarios compiled into the library, sorted.
std::vector<std::string> bundled_scenario_ids();
// Raw JSON text of a bundled scenario; InputError for unknown ids.
const std::string& bundled_scenario_text(const std::string& id);
// A bundled id, or a path to a scenario JSON file.
ScenarioSpec load_scenario(const std::string& id_or_path);

struct Scenario {
  ScenarioSpec spec;
  VocabPtr vocab;
  ExactDistribution p_r;
  GenModelPtr generator;
  ExactDistribution p_theta;
  Corpus generator_train;  // empty for exact generators

  // Fresh i.i.d. draws from the source.
  Corpus real_samples(size_t n, uint64_t seed) const;
  std::vector<double> optimal_d() const;
};

// Builds the vocabulary, trains the generator (if needed) and enumerates
// both distributions. Deterministic in `seed`.
Scenario build_scenario(const ScenarioSpec& spec, uint64_t seed);

// Source draws the scenario generator is trained on (empty for exact
// generators).
Corpus scenario_train_corpus(const ScenarioSpec& spec, VocabPtr vocab,
                             uint64_t seed);
GenModelPtr scenario_generator(const ScenarioSpec& spec, const Corpus& train,
                               VocabPtr vocab, uint64_t seed);
// Enumerates p_r and p_theta around an existing generator.
Scenario assemble_scenario(const ScenarioSpec& spec, VocabPtr vocab,
                           GenModelPtr generator, Corpus generator_train);

struct ScenarioDiscriminator {
  DiscriminatorPtr disc;
  std::vector<double> table;  // disc on every domain sequence
  std::optional<DiscTrainReport> report;
};

// D* for "optimal"; otherwise a TextCNN trained on fresh source samples
// against the scenario generator.
ScenarioDiscriminator scenario_discriminator(const Scenario& s, uint64_t seed);

}  // namespace filtergen

#endif  // FILTERGEN_SCENARIOS_H_
