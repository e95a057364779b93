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

#include "filtergen/ngram.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace filtergen {

using nlohmann::json;

void NGramConfig::validate() const {
  if (order < 1) throw InputError("ngram order must be >= 1");
  if (!(delta > 0.0)) throw InputError("ngram delta must be > 0");
  if (max_len < 1) throw InputError("ngram max_len must be >= 1");
}

json NGramConfig::to_json() const {
  return {{"order", order},
          {"delta", delta},
          {"length_mode", length_mode_name(mode)},
          {"max_len", max_len}};
}

NGramConfig NGramConfig::from_json(const json& j) {
  NGramConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "order") {
      c.order = value.get<int>();
    } else if (key == "delta") {
      c.delta = value.get<double>();
    } else if (key == "length_mode") {
      c.mode = parse_length_mode(value.get<std::string>());
    } else if (key == "max_len") {
      c.max_len = value.get<int>();
    } else if (key != "kind") {
      throw InputError("ngram config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

size_t NGramLM::KeyHash::operator()(const std::vector<TokenId>& k) const {
  size_t h = 0xcbf29ce484222325ULL;
  for (TokenId id : k) {
    h ^= static_cast<size_t>(id) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

NGramLM::NGramLM(VocabPtr vocab, NGramConfig config, int length)
    : GenModel(std::move(vocab), config.mode, length),
      config_(std::move(config)) {}

std::vector<TokenId> NGramLM::context_of(
    std::span<const TokenId> prefix) const {
  const int n = config_.order - 1;
  std::vector<TokenId> ctx(n, kBos);
  const int have = std::min<int>(n, static_cast<int>(prefix.size()));
  std::copy(prefix.end() - have, prefix.end(), ctx.end() - have);
  return ctx;
}

void NGramLM::add_event(std::vector<TokenId> context, TokenId word, double n) {
  auto& cc = counts_[std::move(context)];
  cc.total += n;
  cc.next[word] += n;
}

NGramLM NGramLM::train(const Corpus& train, const NGramConfig& config) {
  config.validate();
  if (train.empty()) throw InputError("train_mle: empty corpus");
  int length = config.max_len;
  if (config.mode == LengthMode::kFixed) {
    length = train.sequences.front().size();
    for (const auto& s : train.sequences) {
      if (s.size() != length) {
        throw InputError("fixed-length ngram needs equal-length sequences");
      }
    }
  }
  NGramLM lm(train.vocab, config, length);
  for (const auto& seq : train.sequences) {
    seq.validate(*train.vocab, length);
    const auto& ids = seq.ids();
    for (int t = 0; t < seq.size(); ++t) {
      if (!lm.in_support(ids[t], t) || ids[t] == kEos) {
        throw InputError("train_mle: token outside the model support");
      }
      lm.add_event(lm.context_of(std::span<const TokenId>(ids.data(), t)),
                   ids[t], 1.0);
    }
    if (config.mode == LengthMode::kVariable && seq.size() < length) {
      lm.add_event(lm.context_of(ids), kEos, 1.0);
    }
  }
  return lm;
}

double NGramLM::count(std::span<const TokenId> context, TokenId word) const {
  auto it = counts_.find(std::vector<TokenId>(context.begin(), context.end()));
  if (it == counts_.end()) return 0.0;
  auto w = it->second.next.find(word);
  return w == it->second.next.end() ? 0.0 : w->second;
}

double NGramLM::context_count(std::span<const TokenId> context) const {
  auto it = counts_.find(std::vector<TokenId>(context.begin(), context.end()));
  return it == counts_.end() ? 0.0 : it->second.total;
}

void NGramLM::next_logits(std::span<const TokenId> prefix,
                          std::span<double> out) const {
  const double log_delta = std::log(config_.delta);
  std::fill(out.begin(), out.end(), log_delta);
  auto it = counts_.find(context_of(prefix));
  if (it == counts_.end()) return;
  for (const auto& [word, n] : it->second.next) {
    out[word] = std::log(n + config_.delta);
  }
}

json NGramLM::config_json() const {
  json j = config_.to_json();
  j["length"] = length();
  return j;
}

json NGramLM::params_json() const {
  // Sorted so checkpoints are byte-stable.
  std::map<std::pair<std::vector<TokenId>, TokenId>, double> sorted;
  for (const auto& [ctx, cc] : counts_) {
    for (const auto& [w, n] : cc.next) sorted[{ctx, w}] = n;
  }
  std::vector<double> keys, values;
  for (const auto& [key, n] : sorted) {
    for (TokenId id : key.first) keys.push_back(id);
    keys.push_back(key.second);
    values.push_back(n);
  }
  return {{"ngram_keys", keys}, {"ngram_counts", values}};
}

size_t NGramLM::parameter_count() const {
  size_t n = 0;
  for (const auto& [ctx, cc] : counts_) n += cc.next.size();
  return n;
}

NGramLM NGramLM::from_checkpoint(VocabPtr vocab, const json& config,
                                 const json& params) {
  json c = config;
  const int length = c.at("length").get<int>();
  c.erase("length");
  NGramLM lm(std::move(vocab), NGramConfig::from_json(c), length);
  const auto keys = params.at("ngram_keys").get<std::vector<double>>();
  const auto values = params.at("ngram_counts").get<std::vector<double>>();
  const size_t width = lm.config_.order;
  if (keys.size() != values.size() * width) {
    throw InputError("ngram checkpoint: key/count size mismatch");
  }
  for (size_t i = 0; i < values.size(); ++i) {
    std::vector<TokenId> ctx;
    for (size_t k = 0; k + 1 < width; ++k) {
      ctx.push_back(static_cast<TokenId>(keys[i * width + k]));
    }
    const auto w = static_cast<TokenId>(keys[i * width + width - 1]);
    if (!lm.vocab().valid_id(w)) throw InputError("ngram checkpoint: bad id");
    lm.add_event(std::move(ctx), w, values[i]);
  }
  return lm;
}

}  // namespace filtergen
