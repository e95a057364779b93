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

// Autoregressive sequence generators with exact log-probabilities and
// temperature-controlled ancestral sampling.

#ifndef FILTERGEN_GENMODEL_H_
#define FILTERGEN_GENMODEL_H_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "filtergen/data.h"
#include "json.hpp"

namespace filtergen {

// kFixed: every sequence has exactly length() content tokens and no EOS;
// used for enumerable synthetic domains.
// kVariable: sequences end with EOS or are cut at length() tokens.
enum class LengthMode { kFixed, kVariable };

const char* length_mode_name(LengthMode mode);
LengthMode parse_length_mode(const std::string& name);

struct SamplerConfig {
  double temperature = 1.0;
  int max_len = kDefaultMaxLen;
  uint64_t seed = 0;

  void validate() const;
};

class GenModel {
 public:
  virtual ~GenModel() = default;

  const Vocab& vocab() const { return *vocab_; }
  const VocabPtr& vocab_ptr() const { return vocab_; }
  LengthMode mode() const { return mode_; }
  // Fixed length, or the maximum length in variable mode.
  int length() const { return length_; }

  // Whether `id` can be emitted at `position`. Fixed mode emits content
  // tokens only; variable mode also emits UNK and EOS (EOS not first, so
  // every sequence is non-empty).
  bool in_support(TokenId id, int position) const;

  // Distribution over the full vocabulary (zeros off-support) of the token
  // following `prefix`, sharpened or flattened as p^(1/temperature).
  std::vector<double> next_distribution(std::span<const TokenId> prefix,
                                        double temperature = 1.0) const;

  // sum_t log p(x_t | x_<t), plus the EOS event for variable-length
  // sequences shorter than length(). -inf if seq is outside the support.
  double seq_logprob(const Sequence& seq) const;

  // Number of predicted events scored by seq_logprob.
  int scored_events(const Sequence& seq) const;

  Sequence sample(const SamplerConfig& cfg, Rng& rng) const;
  Sequence sample(double temperature, Rng& rng) const;

  virtual std::string kind() const = 0;
  virtual nlohmann::json config_json() const = 0;
  virtual nlohmann::json params_json() const = 0;
  virtual size_t parameter_count() const = 0;

 protected:
  GenModel(VocabPtr vocab, LengthMode mode, int length);

  // Unnormalized log-scores for every vocab id; off-support entries are
  // ignored and -inf marks an impossible token.
  virtual void next_logits(std::span<const TokenId> prefix,
                           std::span<double> out) const = 0;

 private:
  VocabPtr vocab_;
  LengthMode mode_;
  int length_;
};

using GenModelPtr = std::shared_ptr<const GenModel>;

// Exact generator backed by a known Markov source (fixed-length mode).
class SourceModel : public GenModel {
 public:
  explicit SourceModel(MarkovSource source, VocabPtr vocab = nullptr);

  const MarkovSource& source() const { return source_; }

  std::string kind() const override { return "markov"; }
  nlohmann::json config_json() const override;
  nlohmann::json params_json() const override;
  size_t parameter_count() const override;

 protected:
  void next_logits(std::span<const TokenId> prefix,
                   std::span<double> out) const override;

 private:
  MarkovSource source_;
};

// exp(total NLL / total scored events). Always >= 1.
double perplexity(const GenModel& model, const Corpus& corpus);

// Mean per-event NLL over a corpus (log of perplexity).
double mean_token_nll(const GenModel& model, const Corpus& corpus);

}  // namespace filtergen

#endif  // FILTERGEN_GENMODEL_H_
