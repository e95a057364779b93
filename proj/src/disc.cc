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

#include "filtergen/disc.h"

#include <cmath>

#include "filtergen/neural_lm.h"

namespace filtergen {

using nlohmann::json;

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

std::vector<double> Discriminator::predict_all(
    std::span<const Sequence> seqs) const {
  std::vector<double> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(predict(s));
  return out;
}

void TextCNNConfig::validate() const {
  if (embed_dim < 1) throw InputError("textcnn embed_dim must be >= 1");
  if (windows.empty() || windows.size() != kernels.size()) {
    throw InputError("textcnn windows and kernels must be non-empty and "
                     "of equal length");
  }
  for (size_t i = 0; i < windows.size(); ++i) {
    if (windows[i] < 1 || kernels[i] < 1) {
      throw InputError("textcnn window sizes and kernel counts must be >= 1");
    }
  }
  if (!(learning_rate > 0.0)) throw InputError("learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw InputError("momentum must be in [0, 1)");
  }
  if (batch_size < 2 || max_epochs < 1 || patience < 1) {
    throw InputError("textcnn batch/epoch settings out of range");
  }
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) {
    throw InputError("valid_fraction must be in (0, 1)");
  }
}

json TextCNNConfig::to_json() const {
  return {{"embed_dim", embed_dim},
          {"windows", windows},
          {"kernels", kernels},
          {"learning_rate", learning_rate},
          {"momentum", momentum},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"valid_fraction", valid_fraction},
          {"copy_generator_embedding", copy_generator_embedding}};
}

TextCNNConfig TextCNNConfig::from_json(const json& j) {
  TextCNNConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "embed_dim") c.embed_dim = v.get<int>();
    else if (key == "windows") c.windows = v.get<std::vector<int>>();
    else if (key == "kernels") c.kernels = v.get<std::vector<int>>();
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "momentum") c.momentum = v.get<double>();
    else if (key == "batch_size") c.batch_size = v.get<int>();
    else if (key == "max_epochs") c.max_epochs = v.get<int>();
    else if (key == "patience") c.patience = v.get<int>();
    else if (key == "valid_fraction") c.valid_fraction = v.get<double>();
    else if (key == "copy_generator_embedding") {
      c.copy_generator_embedding = v.get<bool>();
    } else if (key != "kind") {
      throw InputError("textcnn config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

struct TextCNN::Forward {
  std::vector<TokenId> tokens;  // BOS, sequence, EOS
  std::vector<RowMatrix> inputs;       // per bank: positions x (w * d)
  std::vector<RowMatrix> activations;  // per bank: positions x kernels
  std::vector<std::vector<int>> argmax;
  Eigen::VectorXd features;
  double logit = 0.0;
};

TextCNN::TextCNN(VocabPtr vocab, TextCNNConfig config, uint64_t seed)
    : vocab_(std::move(vocab)), config_(std::move(config)) {
  if (!vocab_) throw InputError("TextCNN: null vocab");
  config_.validate();
  const int d = config_.embed_dim;
  embedding_ = params_.add("embedding", vocab_->size(), d);
  int features = 0;
  for (size_t i = 0; i < config_.windows.size(); ++i) {
    const int w = config_.windows[i];
    const int k = config_.kernels[i];
    conv_w_.push_back(
        params_.add("conv" + std::to_string(w) + "_w", k, w * d));
    conv_b_.push_back(params_.add("conv" + std::to_string(w) + "_b", 1, k));
    features += k;
  }
  out_w_ = params_.add("out_w", 1, features);
  out_b_ = params_.add("out_b", 1, 1);

  Rng rng(seed);
  params_.init_uniform(embedding_, 0.5, rng);
  for (size_t i = 0; i < conv_w_.size(); ++i) {
    const int fan_in = config_.windows[i] * d;
    params_.init_uniform(conv_w_[i],
                         std::sqrt(6.0 / (fan_in + config_.kernels[i])), rng);
    // Small positive bias keeps kernels alive at the start.
    params_.view(conv_b_[i]).setConstant(0.01);
  }
  params_.init_uniform(out_w_, std::sqrt(6.0 / (features + 1)), rng);
}

int TextCNN::unpadded_length(std::span<const TokenId> ids) {
  int n = static_cast<int>(ids.size());
  while (n > 0 && ids[n - 1] == kPad) --n;
  return n;
}

void TextCNN::forward(std::span<const TokenId> ids, Forward& f) const {
  const int n = unpadded_length(ids);
  if (n == 0) throw InputError("TextCNN: empty sequence");
  f.tokens.assign(1, kBos);
  for (int i = 0; i < n; ++i) {
    if (!vocab_->valid_id(ids[i])) throw InputError("TextCNN: invalid id");
    f.tokens.push_back(ids[i]);
  }
  f.tokens.push_back(kEos);
  const int len = static_cast<int>(f.tokens.size());
  const int d = config_.embed_dim;
  const auto emb = params_.view(embedding_);
  const size_t banks = conv_w_.size();
  f.inputs.resize(banks);
  f.activations.resize(banks);
  f.argmax.resize(banks);
  int total = 0;
  for (size_t b = 0; b < banks; ++b) total += config_.kernels[b];
  f.features.resize(total);

  int offset = 0;
  for (size_t b = 0; b < banks; ++b) {
    const int w = config_.windows[b];
    const int k = config_.kernels[b];
    const int positions = std::max(1, len - w + 1);
    RowMatrix& x = f.inputs[b];
    x.setZero(positions, w * d);
    for (int p = 0; p < positions; ++p) {
      for (int j = 0; j < w && p + j < len; ++j) {
        x.block(p, j * d, 1, d) = emb.row(f.tokens[p + j]);
      }
    }
    RowMatrix& a = f.activations[b];
    a = (x * params_.view(conv_w_[b]).transpose()).rowwise() +
        params_.view(conv_b_[b]).row(0);
    auto& am = f.argmax[b];
    am.assign(k, 0);
    for (int c = 0; c < k; ++c) {
      for (int p = 1; p < positions; ++p) {
        if (a(p, c) > a(am[c], c)) am[c] = p;
      }
      f.features[offset + c] = std::max(0.0, a(am[c], c));
    }
    offset += k;
  }
  f.logit = params_.view(out_w_).row(0).dot(f.features) +
            params_.view(out_b_)(0, 0);
}

double TextCNN::logit(std::span<const TokenId> ids) const {
  Forward f;
  forward(ids, f);
  return f.logit;
}

double TextCNN::predict_padded(std::span<const TokenId> ids) const {
  return sigmoid(logit(ids));
}

double TextCNN::predict(const Sequence& seq) const {
  return predict_padded(seq.span());
}

double TextCNN::loss_and_gradient(std::span<const Sequence> seqs,
                                  std::span<const double> labels,
                                  std::vector<double>* grad) const {
  if (seqs.size() != labels.size()) {
    throw InputError("TextCNN: label count mismatch");
  }
  if (seqs.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(seqs.size());
  const int d = config_.embed_dim;
  double loss = 0.0;
  Forward f;
  for (size_t i = 0; i < seqs.size(); ++i) {
    forward(seqs[i].span(), f);
    const double y = labels[i];
    // BCE with logits: y * softplus(-z) + (1 - y) * softplus(z).
    loss += y * softplus(-f.logit) + (1.0 - y) * softplus(f.logit);
    if (!grad) continue;

    const double dlogit = (sigmoid(f.logit) - y) * inv_n;
    auto g_out_w = params_.view(*grad, out_w_);
    g_out_w.row(0) += dlogit * f.features.transpose();
    params_.view(*grad, out_b_)(0, 0) += dlogit;
    const auto out_w = params_.view(out_w_);

    auto g_emb = params_.view(*grad, embedding_);
    int offset = 0;
    for (size_t b = 0; b < conv_w_.size(); ++b) {
      const int w = config_.windows[b];
      const int k = config_.kernels[b];
      const auto wconv = params_.view(conv_w_[b]);
      auto g_w = params_.view(*grad, conv_w_[b]);
      auto g_b = params_.view(*grad, conv_b_[b]);
      for (int c = 0; c < k; ++c) {
        const int p = f.argmax[b][c];
        if (f.activations[b](p, c) <= 0.0) continue;
        const double da = dlogit * out_w(0, offset + c);
        g_w.row(c) += da * f.inputs[b].row(p);
        g_b(0, c) += da;
        if (embedding_frozen_) continue;
        const int len = static_cast<int>(f.tokens.size());
        for (int j = 0; j < w && p + j < len; ++j) {
          g_emb.row(f.tokens[p + j]) += da * wconv.block(c, j * d, 1, d);
        }
      }
      offset += k;
    }
  }
  return loss * inv_n;
}

void TextCNN::set_embedding(const RowMatrix& table, bool frozen) {
  auto emb = params_.view(embedding_);
  if (table.rows() != emb.rows() || table.cols() != emb.cols()) {
    throw InputError("TextCNN: embedding table shape mismatch");
  }
  emb = table;
  embedding_frozen_ = frozen;
}

std::vector<bool> TextCNN::trainable_mask() const {
  std::vector<bool> mask(params_.size(), true);
  if (embedding_frozen_) {
    const auto& b = params_.block(embedding_);
    std::fill(mask.begin() + b.offset, mask.begin() + b.offset + b.size(),
              false);
  }
  return mask;
}

json TextCNN::to_checkpoint() const {
  return {{"format_version", 1},
          {"kind", "textcnn"},
          {"vocab", vocab_->to_json()},
          {"config", config_.to_json()},
          {"embedding_frozen", embedding_frozen_},
          {"params", params_.to_json()}};
}

TextCNN TextCNN::from_checkpoint(const json& j) {
  if (j.value("kind", "") != "textcnn") {
    throw InputError("checkpoint is not a textcnn");
  }
  TextCNN cnn(std::make_shared<const Vocab>(Vocab::from_json(j.at("vocab"))),
              TextCNNConfig::from_json(j.at("config")), 0);
  cnn.params_.load_json(j.at("params"));
  cnn.embedding_frozen_ = j.value("embedding_frozen", false);
  return cnn;
}

json DiscTrainReport::to_json() const {
  return {{"train_loss", train_loss},
          {"valid_accuracy", valid_accuracy},
          {"best_accuracy", best_accuracy},
          {"real_per_epoch", real_per_epoch},
          {"generated_per_epoch", generated_per_epoch},
          {"converged", converged},
          {"best_epoch", best_epoch},
          {"final_valid_accuracy", final_valid_accuracy}};
}

namespace {

double balanced_accuracy(const Discriminator& disc, const Corpus& real,
                         const Corpus& gen) {
  return 1.0 - error_rate(disc, real, gen);
}

}  // namespace

std::pair<TextCNN, DiscTrainReport> train_discriminator(
    const Corpus& real, const GenModel& gen, const TextCNNConfig& config,
    uint64_t seed, const Corpus* real_valid) {
  if (!real.vocab || !(*real.vocab == gen.vocab())) {
    throw InputError("train_discriminator: vocabulary mismatch");
  }
  const auto* neural = dynamic_cast<const NeuralLM*>(&gen);
  RowMatrix table;
  if (neural && config.copy_generator_embedding) {
    if (neural->config().embed_dim != config.embed_dim) {
      throw InputError("train_discriminator: embed_dim must match the "
                       "generator to copy its embeddings");
    }
    table = neural->embedding();
  }
  SampleSource source = [&gen](Rng& rng) { return gen.sample(1.0, rng); };
  return train_discriminator(real, source, config, seed, real_valid,
                             table.size() ? &table : nullptr);
}

std::pair<TextCNN, DiscTrainReport> train_discriminator(
    const Corpus& real, const SampleSource& source, const TextCNNConfig& config,
    uint64_t seed, const Corpus* real_valid,
    const RowMatrix* frozen_embedding) {
  config.validate();
  if (real.empty()) throw InputError("train_discriminator: empty real corpus");
  Corpus train_real = real;
  Corpus valid_real;
  if (real_valid) {
    if (!(*real_valid->vocab == *real.vocab)) {
      throw InputError("train_discriminator: vocabulary mismatch");
    }
    valid_real = *real_valid;
  } else {
    const auto hold = std::max<size_t>(
        1, static_cast<size_t>(real.size() * config.valid_fraction));
    if (hold >= real.size()) {
      throw InputError("train_discriminator: too little real data");
    }
    std::tie(train_real, valid_real) = split_tail(real, hold);
  }

  TextCNN cnn(real.vocab, config, derive_seed(seed, "disc-init"));
  if (frozen_embedding) cnn.set_embedding(*frozen_embedding, true);
  const auto mask = cnn.trainable_mask();

  Rng valid_rng(derive_seed(seed, "disc-valid"));
  Corpus valid_gen{real.vocab, {}, Split::kValid};
  for (size_t i = 0; i < valid_real.size(); ++i) {
    valid_gen.sequences.push_back(source(valid_rng));
  }

  MomentumSgd sgd(cnn.params().size(), config.learning_rate, config.momentum);
  std::vector<double> grad(cnn.params().size());
  Rng gen_rng(derive_seed(seed, "disc-generate"));
  Rng shuffle_rng(derive_seed(seed, "disc-shuffle"));
  const size_t n = train_real.size();
  const size_t half = std::max<size_t>(1, config.batch_size / 2);

  DiscTrainReport report;
  double best = -1.0;
  std::vector<double> best_params = cnn.params().values();
  int since_best = 0;
  std::vector<size_t> order(n);
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::vector<Sequence> fresh;
    fresh.reserve(n);
    for (size_t i = 0; i < n; ++i) fresh.push_back(source(gen_rng));
    for (size_t i = 0; i < n; ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    std::vector<double> batch_losses;
    std::vector<Sequence> batch;
    std::vector<double> labels;
    for (size_t start = 0; start < n; start += half) {
      const size_t end = std::min(n, start + half);
      batch.clear();
      labels.clear();
      // Same count of real and generated examples in every batch.
      for (size_t i = start; i < end; ++i) {
        batch.push_back(train_real.sequences[order[i]]);
        labels.push_back(1.0);
        batch.push_back(fresh[i]);
        labels.push_back(0.0);
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      batch_losses.push_back(cnn.loss_and_gradient(batch, labels, &grad) *
                             static_cast<double>(batch.size()));
      sgd.step(cnn.params().values(), grad, mask);
    }
    report.train_loss.push_back(pairwise_sum(batch_losses) /
                                static_cast<double>(2 * n));
    report.real_per_epoch.push_back(n);
    report.generated_per_epoch.push_back(fresh.size());

    const double acc = balanced_accuracy(cnn, valid_real, valid_gen);
    report.valid_accuracy.push_back(acc);
    if (acc > best) {
      best = acc;
      best_params = cnn.params().values();
      report.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    report.best_accuracy.push_back(best);
    if (since_best >= config.patience) {
      report.converged = true;
      break;
    }
  }
  cnn.params().values() = best_params;
  report.final_valid_accuracy = best;
  return {std::move(cnn), std::move(report)};
}

double error_rate(const Discriminator& disc, const Corpus& real_test,
                  const Corpus& gen_samples) {
  if (real_test.empty() || gen_samples.empty()) {
    throw InputError("error_rate: empty corpus");
  }
  size_t real_wrong = 0;
  for (const auto& s : real_test.sequences) {
    if (disc.predict(s) < 0.5) ++real_wrong;
  }
  size_t gen_wrong = 0;
  for (const auto& s : gen_samples.sequences) {
    if (disc.predict(s) >= 0.5) ++gen_wrong;
  }
  return 0.5 * (static_cast<double>(real_wrong) / real_test.size() +
                static_cast<double>(gen_wrong) / gen_samples.size());
}

}  // namespace filtergen
