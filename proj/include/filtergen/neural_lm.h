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

#ifndef FILTERGEN_NEURAL_LM_H_
#define FILTERGEN_NEURAL_LM_H_

#include "filtergen/genmodel.h"
#include "filtergen/params.h"

namespace filtergen {

struct NeuralLMConfig {
  int context = 3;  // previous tokens seen by the model
  int embed_dim = 32;
  int hidden_dim = 64;
  double learning_rate = 1e-3;
  int batch_size = 128;
  int max_epochs = 30;
  int patience = 3;
  LengthMode mode = LengthMode::kVariable;
  int max_len = kDefaultMaxLen;

  void validate() const;
  nlohmann::json to_json() const;
  static NeuralLMConfig from_json(const nlohmann::json& j);
};

struct NeuralTrainLog {
  std::vector<double> train_nll;  // full-train mean event NLL after each epoch
  std::vector<double> valid_nll;
  int best_epoch = -1;
  bool early_stopped = false;
};

// Fixed-window feedforward language model: the embeddings of the previous
// `context` tokens are concatenated, passed through one tanh layer and
// projected to vocabulary logits. Trained by Adam on mean event NLL with
// early stopping on validation NLL.
class NeuralLM : public GenModel {
 public:
  // One prediction: BOS-padded context window, target id, target position.
  struct Event {
    std::vector<TokenId> context;
    TokenId target;
    int position;
  };

  NeuralLM(VocabPtr vocab, NeuralLMConfig config, int length, uint64_t seed);

  static NeuralLM train(const Corpus& train, const Corpus& valid,
                        const NeuralLMConfig& config, uint64_t seed,
                        NeuralTrainLog* log = nullptr);

  std::vector<Event> events_of(const Sequence& seq) const;
  std::vector<Event> events_of(const Corpus& corpus) const;

  // Mean NLL over `events`; accumulates d(mean NLL)/d(params) into `grad`
  // when non-null (grad must be sized like params()).
  double loss_and_gradient(std::span<const Event> events,
                           std::vector<double>* grad) const;

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const NeuralLMConfig& config() const { return config_; }
  // |V| x embed_dim.
  RowMatrix embedding() const;

  std::string kind() const override { return "neural"; }
  nlohmann::json config_json() const override;
  nlohmann::json params_json() const override { return params_.to_json(); }
  size_t parameter_count() const override { return params_.size(); }

  static NeuralLM from_checkpoint(VocabPtr vocab, const nlohmann::json& config,
                                  const nlohmann::json& params);

 protected:
  void next_logits(std::span<const TokenId> prefix,
                   std::span<double> out) const override;

 private:
  std::vector<TokenId> context_of(std::span<const TokenId> prefix) const;

  NeuralLMConfig config_;
  ParamSet params_;
  int embedding_, w_hidden_, b_hidden_, w_out_, b_out_;
};

}  // namespace filtergen

#endif  // FILTERGEN_NEURAL_LM_H_
