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

#include "filtergen/neural_lm.h"

#include <cmath>
#include <limits>

namespace filtergen {

using nlohmann::json;

void NeuralLMConfig::validate() const {
  if (context < 1 || embed_dim < 1 || hidden_dim < 1) {
    throw InputError("neural LM dimensions must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw InputError("learning_rate must be > 0");
  if (batch_size < 1 || max_epochs < 1 || patience < 1 || max_len < 1) {
    throw InputError("neural LM batch/epoch settings must be >= 1");
  }
}

json NeuralLMConfig::to_json() const {
  return {{"context", context},
          {"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"length_mode", length_mode_name(mode)},
          {"max_len", max_len}};
}

NeuralLMConfig NeuralLMConfig::from_json(const json& j) {
  NeuralLMConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "context") c.context = v.get<int>();
    else if (key == "embed_dim") c.embed_dim = v.get<int>();
    else if (key == "hidden_dim") c.hidden_dim = v.get<int>();
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "batch_size") c.batch_size = v.get<int>();
    else if (key == "max_epochs") c.max_epochs = v.get<int>();
    else if (key == "patience") c.patience = v.get<int>();
    else if (key == "length_mode") c.mode = parse_length_mode(v.get<std::string>());
    else if (key == "max_len") c.max_len = v.get<int>();
    else if (key != "kind") {
      throw InputError("neural config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

NeuralLM::NeuralLM(VocabPtr vocab, NeuralLMConfig config, int length,
                   uint64_t seed)
    : GenModel(std::move(vocab), config.mode, length),
      config_(std::move(config)) {
  config_.validate();
  const int v = this->vocab().size();
  const int in = config_.context * config_.embed_dim;
  embedding_ = params_.add("embedding", v, config_.embed_dim);
  w_hidden_ = params_.add("w_hidden", config_.hidden_dim, in);
  b_hidden_ = params_.add("b_hidden", 1, config_.hidden_dim);
  w_out_ = params_.add("w_out", v, config_.hidden_dim);
  b_out_ = params_.add("b_out", 1, v);
  Rng rng(seed);
  params_.init_uniform(embedding_, 0.1, rng);
  params_.init_uniform(w_hidden_, std::sqrt(6.0 / (in + config_.hidden_dim)),
                       rng);
  params_.init_uniform(w_out_, std::sqrt(6.0 / (v + config_.hidden_dim)), rng);
}

std::vector<TokenId> NeuralLM::context_of(
    std::span<const TokenId> prefix) const {
  const int k = config_.context;
  std::vector<TokenId> ctx(k, kBos);
  const int have = std::min<int>(k, static_cast<int>(prefix.size()));
  std::copy(prefix.end() - have, prefix.end(), ctx.end() - have);
  return ctx;
}

std::vector<NeuralLM::Event> NeuralLM::events_of(const Sequence& seq) const {
  std::vector<Event> events;
  const auto& ids = seq.ids();
  for (int t = 0; t < seq.size(); ++t) {
    events.push_back(
        {context_of(std::span<const TokenId>(ids.data(), t)), ids[t], t});
  }
  if (mode() == LengthMode::kVariable && seq.size() < length()) {
    events.push_back({context_of(ids), kEos, seq.size()});
  }
  return events;
}

std::vector<NeuralLM::Event> NeuralLM::events_of(const Corpus& corpus) const {
  std::vector<Event> events;
  for (const auto& seq : corpus.sequences) {
    auto e = events_of(seq);
    events.insert(events.end(), e.begin(), e.end());
  }
  return events;
}

double NeuralLM::loss_and_gradient(std::span<const Event> events,
                                   std::vector<double>* grad) const {
  if (events.empty()) return 0.0;
  const int v = vocab().size();
  const int d = config_.embed_dim;
  const int k = config_.context;
  const auto b = static_cast<Eigen::Index>(events.size());
  const auto emb = params_.view(embedding_);
  const auto wh = params_.view(w_hidden_);
  const auto bh = params_.view(b_hidden_);
  const auto wo = params_.view(w_out_);
  const auto bo = params_.view(b_out_);

  RowMatrix x(b, k * d);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (int j = 0; j < k; ++j) {
      x.block(i, j * d, 1, d) = emb.row(events[i].context[j]);
    }
  }
  RowMatrix h = ((x * wh.transpose()).rowwise() + bh.row(0)).array().tanh();
  RowMatrix z = (h * wo.transpose()).rowwise() + bo.row(0);

  // Masked softmax; z becomes d(loss)/d(logits) in place.
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int w = 0; w < v; ++w) {
      if (in_support(w, events[i].position)) mx = std::max(mx, z(i, w));
    }
    double total = 0.0;
    for (int w = 0; w < v; ++w) {
      if (in_support(w, events[i].position)) {
        z(i, w) = std::exp(z(i, w) - mx);
        total += z(i, w);
      } else {
        z(i, w) = 0.0;
      }
    }
    z.row(i) /= total;
    loss -= std::log(z(i, events[i].target));
    z(i, events[i].target) -= 1.0;
  }
  loss *= inv_b;
  if (!grad) return loss;

  z *= inv_b;
  auto g_emb = params_.view(*grad, embedding_);
  auto g_wh = params_.view(*grad, w_hidden_);
  auto g_bh = params_.view(*grad, b_hidden_);
  auto g_wo = params_.view(*grad, w_out_);
  auto g_bo = params_.view(*grad, b_out_);
  g_wo.noalias() += z.transpose() * h;
  g_bo.row(0) += z.colwise().sum();
  RowMatrix da = (z * wo).array() * (1.0 - h.array().square());
  g_wh.noalias() += da.transpose() * x;
  g_bh.row(0) += da.colwise().sum();
  RowMatrix dx = da * wh;
  for (Eigen::Index i = 0; i < b; ++i) {
    for (int j = 0; j < k; ++j) {
      g_emb.row(events[i].context[j]) += dx.block(i, j * d, 1, d);
    }
  }
  return loss;
}

void NeuralLM::next_logits(std::span<const TokenId> prefix,
                           std::span<double> out) const {
  const auto ctx = context_of(prefix);
  const int d = config_.embed_dim;
  const auto emb = params_.view(embedding_);
  Eigen::VectorXd x(config_.context * d);
  for (int j = 0; j < config_.context; ++j) {
    x.segment(j * d, d) = emb.row(ctx[j]).transpose();
  }
  Eigen::VectorXd h = (params_.view(w_hidden_) * x +
                       params_.view(b_hidden_).row(0).transpose())
                          .array()
                          .tanh();
  Eigen::VectorXd z =
      params_.view(w_out_) * h + params_.view(b_out_).row(0).transpose();
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = z[i];
}

RowMatrix NeuralLM::embedding() const { return params_.view(embedding_); }

json NeuralLM::config_json() const {
  json j = config_.to_json();
  j["length"] = length();
  return j;
}

NeuralLM NeuralLM::from_checkpoint(VocabPtr vocab, const json& config,
                                   const json& params) {
  json c = config;
  const int length = c.at("length").get<int>();
  c.erase("length");
  NeuralLM lm(std::move(vocab), NeuralLMConfig::from_json(c), length, 0);
  lm.params_.load_json(params);
  return lm;
}

NeuralLM NeuralLM::train(const Corpus& train, const Corpus& valid,
                         const NeuralLMConfig& config, uint64_t seed,
                         NeuralTrainLog* log) {
  config.validate();
  if (train.empty() || valid.empty()) {
    throw InputError("train_mle: empty corpus");
  }
  if (!(*train.vocab == *valid.vocab)) {
    throw InputError("train_mle: train and valid vocabularies differ");
  }
  int length = config.max_len;
  if (config.mode == LengthMode::kFixed) {
    length = train.sequences.front().size();
  }
  NeuralLM lm(train.vocab, config, length, derive_seed(seed, "neural-init"));
  for (const auto* corpus : {&train, &valid}) {
    for (const auto& seq : corpus->sequences) {
      seq.validate(*train.vocab, length);
      if (config.mode == LengthMode::kFixed && seq.size() != length) {
        throw InputError("fixed-length model needs equal-length sequences");
      }
    }
  }
  auto train_events = lm.events_of(train);
  const auto valid_events = lm.events_of(valid);
  Rng rng(derive_seed(seed, "neural-shuffle"));
  AdamOptimizer adam(lm.params_.size(), config.learning_rate);
  std::vector<double> grad(lm.params_.size());

  NeuralTrainLog local;
  NeuralTrainLog& out = log ? *log : local;
  out = NeuralTrainLog{};
  double best = lm.loss_and_gradient(valid_events, nullptr);
  std::vector<double> best_params = lm.params_.values();
  int since_best = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(train_events);
    for (size_t start = 0; start < train_events.size();
         start += config.batch_size) {
      const size_t n = std::min<size_t>(config.batch_size,
                                        train_events.size() - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      lm.loss_and_gradient(
          std::span<const Event>(train_events.data() + start, n), &grad);
      adam.step(lm.params_.values(), grad);
    }
    out.train_nll.push_back(lm.loss_and_gradient(train_events, nullptr));
    const double v = lm.loss_and_gradient(valid_events, nullptr);
    out.valid_nll.push_back(v);
    if (v < best) {
      best = v;
      best_params = lm.params_.values();
      out.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      out.early_stopped = true;
      break;
    }
  }
  lm.params_.values() = best_params;
  return lm;
}

}  // namespace filtergen
