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

#ifndef FILTERGEN_NGRAM_H_
#define FILTERGEN_NGRAM_H_

#include <unordered_map>

#include "filtergen/genmodel.h"

namespace filtergen {

struct NGramConfig {
  int order = 2;
  double delta = 0.01;
  LengthMode mode = LengthMode::kVariable;
  int max_len = kDefaultMaxLen;  // variable mode only

  void validate() const;
  nlohmann::json to_json() const;
  // Strict: unknown keys are rejected. Missing keys keep defaults.
  static NGramConfig from_json(const nlohmann::json& j);
};

// Additively smoothed n-gram model:
//   p(w | h) = (C(h, w) + delta) / (C(h) + delta * |support|)
// where h is the previous order-1 tokens (BOS-padded). Unseen contexts get
// the uniform distribution over the support.
class NGramLM : public GenModel {
 public:
  // Closed-form MLE with smoothing. In fixed mode all training sequences
  // must share one length, which becomes the model length.
  static NGramLM train(const Corpus& train, const NGramConfig& config);

  const NGramConfig& config() const { return config_; }
  // Raw count C(h, w); h must have order-1 ids.
  double count(std::span<const TokenId> context, TokenId word) const;
  double context_count(std::span<const TokenId> context) const;

  std::string kind() const override { return "ngram"; }
  nlohmann::json config_json() const override;
  nlohmann::json params_json() const override;
  size_t parameter_count() const override;

  static NGramLM from_checkpoint(VocabPtr vocab, const nlohmann::json& config,
                                 const nlohmann::json& params);

 protected:
  void next_logits(std::span<const TokenId> prefix,
                   std::span<double> out) const override;

 private:
  struct KeyHash {
    size_t operator()(const std::vector<TokenId>& k) const;
  };
  struct ContextCounts {
    double total = 0.0;
    std::unordered_map<TokenId, double> next;
  };

  NGramLM(VocabPtr vocab, NGramConfig config, int length);
  std::vector<TokenId> context_of(std::span<const TokenId> prefix) const;
  void add_event(std::vector<TokenId> context, TokenId word, double n);

  NGramConfig config_;
  std::unordered_map<std::vector<TokenId>, ContextCounts, KeyHash> counts_;
};

}  // namespace filtergen

#endif  // FILTERGEN_NGRAM_H_
