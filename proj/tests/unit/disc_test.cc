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

#include <doctest.h>

#include <cmath>

#include "../support/checks.h"
#include "filtergen/models.h"
#include "filtergen/oracle.h"

using namespace filtergen;

namespace {

MarkovSource starts_with(int first) {
  MarkovSource s;
  s.initial = {0.0, 0.0, 0.0};
  s.initial[first] = 1.0;
  s.transition.assign(3, std::vector<double>(3, 1.0 / 3));
  s.length = 4;
  return s;
}

TextCNNConfig small_config() {
  TextCNNConfig cfg;
  cfg.embed_dim = 8;
  cfg.kernels = {8, 8};
  cfg.learning_rate = 0.05;
  cfg.batch_size = 64;
  cfg.max_epochs = 10;
  cfg.patience = 3;
  return cfg;
}

VocabPtr abc() {
  return std::make_shared<const Vocab>(std::vector<std::string>{"a", "b", "c"});
}

}  // namespace

TEST_CASE("separable classes are learned") {
  const MarkovSource real_src = starts_with(0);
  const auto vocab = std::make_shared<const Vocab>(real_src.make_vocab());
  const SourceModel gen(starts_with(1), vocab);
  const Corpus real = synth_markov(real_src, 2000, 1, vocab);
  const auto [cnn, report] = train_discriminator(real, gen, small_config(), 2);
  CHECK(report.final_valid_accuracy >= 0.99);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    CHECK(cnn.predict(sample_markov(real_src, rng)) > 0.9);
    CHECK(cnn.predict(gen.sample(1.0, rng)) < 0.1);
  }
  const Corpus test_real = synth_markov(real_src, 500, 4, vocab);
  Corpus test_gen{vocab, {}, Split::kTest};
  for (int i = 0; i < 500; ++i) test_gen.sequences.push_back(gen.sample(1.0, rng));
  CHECK(error_rate(cnn, test_real, test_gen) == 0.0);
}

TEST_CASE("identical distributions stay at chance") {
  MarkovSource src = starts_with(0);
  src.initial = {0.5, 0.3, 0.2};
  const auto vocab = std::make_shared<const Vocab>(src.make_vocab());
  const SourceModel gen(src, vocab);
  const Corpus real = synth_markov(src, 20000, 5, vocab);
  const auto [cnn, report] = train_discriminator(real, gen, small_config(), 6);
  CHECK(report.final_valid_accuracy >= 0.45);
  CHECK(report.final_valid_accuracy <= 0.55);
}

TEST_CASE("training is balanced and the running best never drops") {
  const MarkovSource real_src = starts_with(0);
  const auto vocab = std::make_shared<const Vocab>(real_src.make_vocab());
  const SourceModel gen(starts_with(2), vocab);
  const Corpus real = synth_markov(real_src, 300, 1, vocab);
  TextCNNConfig cfg = small_config();
  cfg.max_epochs = 6;
  const auto [cnn, report] = train_discriminator(real, gen, cfg, 7);
  REQUIRE(!report.real_per_epoch.empty());
  for (size_t e = 0; e < report.real_per_epoch.size(); ++e) {
    CHECK(report.real_per_epoch[e] == report.generated_per_epoch[e]);
    if (e > 0) CHECK(report.best_accuracy[e] >= report.best_accuracy[e - 1]);
    CHECK(report.valid_accuracy[e] >= 0.0);
    CHECK(report.valid_accuracy[e] <= 1.0);
  }
}

TEST_CASE("training is deterministic given the seed") {
  const MarkovSource real_src = starts_with(0);
  const auto vocab = std::make_shared<const Vocab>(real_src.make_vocab());
  const SourceModel gen(starts_with(1), vocab);
  const Corpus real = synth_markov(real_src, 200, 1, vocab);
  TextCNNConfig cfg = small_config();
  cfg.max_epochs = 2;
  const auto a = train_discriminator(real, gen, cfg, 11);
  const auto b = train_discriminator(real, gen, cfg, 11);
  CHECK(a.first.params().values() == b.first.params().values());
}

TEST_CASE("vocabulary mismatch is rejected") {
  const MarkovSource src = starts_with(0);
  const SourceModel gen(src);
  const auto other = std::make_shared<const Vocab>(std::vector<std::string>{"x", "y", "z"});
  Corpus real{other, {Sequence{4, 5, 6, 4}}, Split::kTrain};
  CHECK_THROWS_AS(train_discriminator(real, gen, small_config(), 1), InputError);
}

TEST_CASE("outputs are strictly inside (0, 1) and ignore padding") {
  TextCNNConfig cfg = small_config();
  const TextCNN cnn(abc(), cfg, 3);
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TokenId> ids(1 + rng.below(6));
    for (auto& id : ids) id = kNumReserved + static_cast<TokenId>(rng.below(3));
    const double p = cnn.predict(Sequence(ids));
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    std::vector<TokenId> padded = ids;
    padded.resize(ids.size() + 1 + rng.below(5), kPad);
    CHECK(std::abs(cnn.predict_padded(padded) - p) <= 1e-12);
  }
}

TEST_CASE("sequences shorter than the widest window are scored") {
  const TextCNN cnn(abc(), small_config(), 3);
  const double p = cnn.predict(Sequence{4});
  CHECK(p > 0.0);
  CHECK(p < 1.0);
}

TEST_CASE("TextCNN gradient matches central differences") {
  TextCNNConfig cfg;
  cfg.embed_dim = 3;
  cfg.windows = {2, 3};
  cfg.kernels = {2, 3};
  TextCNN cnn(abc(), cfg, 5);
  const std::vector<Sequence> seqs = {Sequence{4, 5, 6}, Sequence{6, 4},
                                      Sequence{5, 5, 4, 6}, Sequence{4}};
  const std::vector<double> labels = {1.0, 0.0, 1.0, 0.0};
  const auto check = testing::check_textcnn(cnn, seqs, labels, 1e-5);
  CHECK(check.checked == cnn.params().size());
  CHECK(check.max_rel_error <= 1e-4);
}

TEST_CASE("frozen embeddings receive no gradient") {
  TextCNNConfig cfg = small_config();
  cfg.embed_dim = 2;
  TextCNN cnn(abc(), cfg, 5);
  RowMatrix table = RowMatrix::Constant(7, 2, 0.3);
  cnn.set_embedding(table, true);
  CHECK(cnn.embedding_frozen());
  std::vector<double> grad(cnn.params().size(), 0.0);
  const std::vector<Sequence> seqs = {Sequence{4, 5, 6}};
  const std::vector<double> labels = {1.0};
  cnn.loss_and_gradient(seqs, labels, &grad);
  const auto mask = cnn.trainable_mask();
  size_t frozen = 0;
  for (size_t i = 0; i < grad.size(); ++i) {
    if (!mask[i]) {
      ++frozen;
      CHECK(grad[i] == 0.0);
    }
  }
  CHECK(frozen == 14);
}

TEST_CASE("generator embeddings are copied and stay fixed") {
  const MarkovSource src = starts_with(0);
  const auto vocab = std::make_shared<const Vocab>(src.make_vocab());
  NeuralLMConfig ncfg;
  ncfg.embed_dim = 8;
  ncfg.hidden_dim = 4;
  ncfg.mode = LengthMode::kFixed;
  const NeuralLM gen(vocab, ncfg, 4, 1);
  const Corpus real = synth_markov(src, 200, 1, vocab);
  TextCNNConfig cfg = small_config();
  cfg.max_epochs = 2;
  const auto [cnn, report] = train_discriminator(real, gen, cfg, 3);
  CHECK(cnn.embedding_frozen());
  const int e = cnn.params().find("embedding");
  REQUIRE(e >= 0);
  CHECK(RowMatrix(cnn.params().view(e)) == gen.embedding());
}

TEST_CASE("error rate edge cases") {
  const auto vocab = abc();
  const Corpus real{vocab, {Sequence{4}, Sequence{4}}, Split::kTest};
  const Corpus gen{vocab, {Sequence{5}, Sequence{5}}, Split::kTest};
  CHECK(error_rate(ConstantDiscriminator(0.9), real, gen) == 0.5);
  CHECK(error_rate(ConstantDiscriminator(0.1), real, gen) == 0.5);
  ExactDistribution dom;
  dom.vocab = vocab;
  dom.length = 1;
  dom.domain = {Sequence{4}, Sequence{5}, Sequence{6}};
  dom.probs = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const TableDiscriminator perfect(dom, {0.9, 0.1, 0.5});
  CHECK(error_rate(perfect, real, gen) == 0.0);
  CHECK_THROWS_AS(error_rate(perfect, Corpus{vocab, {}, Split::kTest}, gen), InputError);
}

TEST_CASE("discriminator checkpoints round trip") {
  TextCNN cnn(abc(), small_config(), 8);
  const TextCNN back = TextCNN::from_checkpoint(cnn.to_checkpoint());
  CHECK(back.params().values() == cnn.params().values());
  CHECK(back.predict(Sequence{4, 6, 5}) == cnn.predict(Sequence{4, 6, 5}));
  CHECK(TextCNNConfig::from_json(small_config().to_json()).kernels == small_config().kernels);
  CHECK_THROWS_AS(TextCNNConfig::from_json({{"kernel", 3}}), InputError);
}
