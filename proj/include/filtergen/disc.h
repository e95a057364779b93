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

// Real-vs-generated sequence classifiers.

#ifndef FILTERGEN_DISC_H_
#define FILTERGEN_DISC_H_

#include <functional>
#include <memory>
#include <optional>

#include "filtergen/genmodel.h"
#include "filtergen/params.h"

namespace filtergen {

// Scores a sequence with the probability that it is real.
class Discriminator {
 public:
  virtual ~Discriminator() = default;
  virtual double predict(const Sequence& seq) const = 0;

  std::vector<double> predict_all(std::span<const Sequence> seqs) const;
};

using DiscriminatorPtr = std::shared_ptr<const Discriminator>;

class ConstantDiscriminator : public Discriminator {
 public:
  explicit ConstantDiscriminator(double value) : value_(value) {}
  double predict(const Sequence&) const override { return value_; }

 private:
  double value_;
};

struct TextCNNConfig {
  int embed_dim = 32;
  std::vector<int> windows = {2, 3};
  std::vector<int> kernels = {16, 32};
  double learning_rate = 1e-4;
  double momentum = 0.9;
  int batch_size = 512;
  int max_epochs = 200;
  int patience = 5;
  // Share of the real data held out for validation when no split is given.
  double valid_fraction = 0.1;
  // Copy (and freeze) the generator's embeddings when it has any.
  bool copy_generator_embedding = true;

  void validate() const;
  nlohmann::json to_json() const;
  static TextCNNConfig from_json(const nlohmann::json& j);
};

// Convolutional text classifier: token embeddings, one convolution bank per
// window size with ReLU, global max-pool over positions, a linear layer and
// a sigmoid. The input is wrapped in BOS ... EOS so the first and last
// tokens are visible to the filters. Trailing PAD tokens are stripped and
// positions past the end read zero vectors.
class TextCNN : public Discriminator {
 public:
  TextCNN(VocabPtr vocab, TextCNNConfig config, uint64_t seed);

  double predict(const Sequence& seq) const override;
  // Ids may carry trailing PAD tokens.
  double predict_padded(std::span<const TokenId> ids) const;
  double logit(std::span<const TokenId> ids) const;

  // Mean binary cross-entropy over the examples (label 1 = real).
  // Accumulates gradients when `grad` is non-null; frozen embeddings get no
  // gradient.
  double loss_and_gradient(std::span<const Sequence> seqs,
                           std::span<const double> labels,
                           std::vector<double>* grad) const;

  void set_embedding(const RowMatrix& table, bool frozen);
  bool embedding_frozen() const { return embedding_frozen_; }
  // false for frozen parameters.
  std::vector<bool> trainable_mask() const;

  const Vocab& vocab() const { return *vocab_; }
  const VocabPtr& vocab_ptr() const { return vocab_; }
  const TextCNNConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  nlohmann::json to_checkpoint() const;
  static TextCNN from_checkpoint(const nlohmann::json& j);

 private:
  struct Forward;
  void forward(std::span<const TokenId> ids, Forward& f) const;
  static int unpadded_length(std::span<const TokenId> ids);

  VocabPtr vocab_;
  TextCNNConfig config_;
  ParamSet params_;
  int embedding_;
  std::vector<int> conv_w_, conv_b_;
  int out_w_, out_b_;
  bool embedding_frozen_ = false;
};

struct DiscTrainReport {
  std::vector<double> train_loss;
  std::vector<double> valid_accuracy;
  std::vector<double> best_accuracy;  // running best after each epoch
  std::vector<size_t> real_per_epoch;
  std::vector<size_t> generated_per_epoch;
  bool converged = false;
  int best_epoch = -1;
  double final_valid_accuracy = 0.0;

  nlohmann::json to_json() const;
};

// Anything that emits generated sequences (a generator, a filtered
// generator, ...).
using SampleSource = std::function<Sequence(Rng&)>;

// Trains on balanced batches: every epoch pairs each real training sequence
// with one freshly generated sequence. Stops once validation accuracy has
// not improved for `patience` epochs and restores the best epoch's weights.
// Without `real_valid`, the last valid_fraction of `real` is held out.
std::pair<TextCNN, DiscTrainReport> train_discriminator(
    const Corpus& real, const GenModel& gen, const TextCNNConfig& config,
    uint64_t seed, const Corpus* real_valid = nullptr);

std::pair<TextCNN, DiscTrainReport> train_discriminator(
    const Corpus& real, const SampleSource& source, const TextCNNConfig& config,
    uint64_t seed, const Corpus* real_valid = nullptr,
    const RowMatrix* frozen_embedding = nullptr);

// Balanced error at threshold 0.5: mean of the error on real sequences and
// the error on generated sequences. Equals the misclassified fraction of the
// union when both sets have the same size.
double error_rate(const Discriminator& disc, const Corpus& real_test,
                  const Corpus& gen_samples);

}  // namespace filtergen

#endif  // FILTERGEN_DISC_H_
