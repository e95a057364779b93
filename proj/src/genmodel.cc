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

#include "filtergen/genmodel.h"

#include <cmath>
#include <limits>

namespace filtergen {

const char* length_mode_name(LengthMode mode) {
  return mode == LengthMode::kFixed ? "fixed" : "variable";
}

LengthMode parse_length_mode(const std::string& name) {
  if (name == "fixed") return LengthMode::kFixed;
  if (name == "variable") return LengthMode::kVariable;
  throw InputError("unknown length mode '" + name + "'");
}

void SamplerConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InputError("temperature must be > 0");
  }
  if (max_len < 1) throw InputError("max_len must be >= 1");
}

GenModel::GenModel(VocabPtr vocab, LengthMode mode, int length)
    : vocab_(std::move(vocab)), mode_(mode), length_(length) {
  if (!vocab_) throw InputError("GenModel: null vocab");
  if (length_ < 1) throw InputError("GenModel: length must be >= 1");
}

bool GenModel::in_support(TokenId id, int position) const {
  if (!vocab_->valid_id(id)) return false;
  if (id >= kNumReserved) return true;
  if (mode_ == LengthMode::kFixed) return false;
  if (id == kUnk) return true;
  return id == kEos && position > 0;
}

std::vector<double> GenModel::next_distribution(std::span<const TokenId> prefix,
                                                double temperature) const {
  const int v = vocab_->size();
  const int position = static_cast<int>(prefix.size());
  std::vector<double> logits(v, -std::numeric_limits<double>::infinity());
  next_logits(prefix, logits);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < v; ++i) {
    if (!in_support(i, position)) {
      logits[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    logits[i] /= temperature;
    max_logit = std::max(max_logit, logits[i]);
  }
  if (!std::isfinite(max_logit)) {
    throw DegenerateError("next_distribution: no token has positive mass");
  }
  std::vector<double> probs(v, 0.0);
  double total = 0.0;
  for (int i = 0; i < v; ++i) {
    if (std::isfinite(logits[i])) {
      probs[i] = std::exp(logits[i] - max_logit);
      total += probs[i];
    }
  }
  for (double& p : probs) p /= total;
  return probs;
}

int GenModel::scored_events(const Sequence& seq) const {
  const bool eos = mode_ == LengthMode::kVariable && seq.size() < length_;
  return seq.size() + (eos ? 1 : 0);
}

double GenModel::seq_logprob(const Sequence& seq) const {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (mode_ == LengthMode::kFixed ? seq.size() != length_
                                  : seq.size() > length_) {
    return kNegInf;
  }
  const auto& ids = seq.ids();
  double total = 0.0;
  for (int t = 0; t < seq.size(); ++t) {
    if (!in_support(ids[t], t) || ids[t] == kEos) return kNegInf;
    const auto probs =
        next_distribution(std::span<const TokenId>(ids.data(), t));
    total += std::log(probs[ids[t]]);
  }
  if (mode_ == LengthMode::kVariable && seq.size() < length_) {
    total += std::log(next_distribution(ids)[kEos]);
  }
  return total;
}

Sequence GenModel::sample(const SamplerConfig& cfg, Rng& rng) const {
  cfg.validate();
  std::vector<TokenId> ids;
  if (mode_ == LengthMode::kFixed) {
    for (int t = 0; t < length_; ++t) {
      const auto probs = next_distribution(ids, cfg.temperature);
      ids.push_back(static_cast<TokenId>(rng.categorical(probs)));
    }
    return Sequence(std::move(ids));
  }
  const int max_len = std::min(length_, cfg.max_len);
  while (static_cast<int>(ids.size()) < max_len) {
    const auto probs = next_distribution(ids, cfg.temperature);
    const auto next = static_cast<TokenId>(rng.categorical(probs));
    if (next == kEos) break;
    ids.push_back(next);
  }
  return Sequence(std::move(ids));
}

Sequence GenModel::sample(double temperature, Rng& rng) const {
  SamplerConfig cfg;
  cfg.temperature = temperature;
  cfg.max_len = length_;
  return sample(cfg, rng);
}

SourceModel::SourceModel(MarkovSource source, VocabPtr vocab)
    : GenModel(vocab ? vocab
                     : std::make_shared<const Vocab>(source.make_vocab()),
               LengthMode::kFixed, source.length),
      source_(std::move(source)) {
  source_.validate();
  if (this->vocab().content_size() != source_.num_states()) {
    throw InputError("SourceModel: vocab does not match source states");
  }
}

nlohmann::json SourceModel::config_json() const {
  return {{"length", source_.length}};
}

nlohmann::json SourceModel::params_json() const {
  std::vector<double> flat;
  for (const auto& row : source_.transition) {
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return {{"initial", source_.initial}, {"transition", flat}};
}

size_t SourceModel::parameter_count() const {
  const size_t k = source_.initial.size();
  return k + k * k;
}

void SourceModel::next_logits(std::span<const TokenId> prefix,
                              std::span<double> out) const {
  const std::vector<double>& row =
      prefix.empty() ? source_.initial
                     : source_.transition[prefix.back() - kNumReserved];
  for (size_t i = 0; i < row.size(); ++i) {
    out[kNumReserved + i] = std::log(row[i]);
  }
}

double mean_token_nll(const GenModel& model, const Corpus& corpus) {
  if (corpus.empty()) throw InputError("perplexity: empty corpus");
  std::vector<double> nll;
  nll.reserve(corpus.size());
  double events = 0.0;
  for (const auto& seq : corpus.sequences) {
    nll.push_back(-model.seq_logprob(seq));
    events += model.scored_events(seq);
  }
  return pairwise_sum(nll) / events;
}

double perplexity(const GenModel& model, const Corpus& corpus) {
  return std::exp(mean_token_nll(model, corpus));
}

}  // namespace filtergen
