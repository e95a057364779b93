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

// Generator configuration, MLE training entry point and JSON checkpoints.
//
// Checkpoints are single JSON documents:
//   {"format_version": 1, "kind": "ngram" | "neural" | "markov" | "textcnn",
//    "vocab": {"tokens": [...]}, "config": {...}, "params": {name: [f64...]}}

#ifndef FILTERGEN_MODELS_H_
#define FILTERGEN_MODELS_H_

#include <memory>
#include <string>

#include "filtergen/disc.h"
#include "filtergen/genmodel.h"
#include "filtergen/neural_lm.h"
#include "filtergen/ngram.h"

namespace filtergen {

inline constexpr int kCheckpointVersion = 1;

struct GenConfig {
  std::string kind = "ngram";  // "ngram" | "neural"
  NGramConfig ngram;
  NeuralLMConfig neural;
  int vocab_size = 10000;  // used when a vocabulary is built from text

  LengthMode mode() const;
  nlohmann::json to_json() const;
  // Flat object: {"kind": ..., <fields of the chosen model>, "vocab_size"}.
  static GenConfig from_json(const nlohmann::json& j);
};

// Maximum-likelihood training. The n-gram path is closed form and ignores
// `valid` apart from the vocabulary check; the neural path early-stops on
// it (an empty `valid` holds out the last 10% of `train`).
std::shared_ptr<GenModel> train_mle(const Corpus& train, const Corpus& valid,
                                    const GenConfig& config, uint64_t seed);

// Configuration that retrains a model like `model`; exact Markov
// generators map to the default n-gram settings for their length.
GenConfig gen_config_of(const GenModel& model);

nlohmann::json gen_checkpoint(const GenModel& model);
std::shared_ptr<GenModel> gen_from_checkpoint(const nlohmann::json& j);

void save_json(const std::string& path, const nlohmann::json& j);
nlohmann::json load_json(const std::string& path);

void save_gen_model(const std::string& path, const GenModel& model);
std::shared_ptr<GenModel> load_gen_model(const std::string& path);
void save_discriminator(const std::string& path, const TextCNN& disc);
std::shared_ptr<TextCNN> load_discriminator(const std::string& path);

}  // namespace filtergen

#endif  // FILTERGEN_MODELS_H_
