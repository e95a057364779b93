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
#include <filesystem>
#include <functional>

#include "filtergen/models.h"
#include "filtergen/oracle.h"
#include "filtergen/scenarios.h"

using namespace filtergen;

namespace {

VocabPtr abc() {
  return std::make_shared<const Vocab>(std::vector<std::string>{"a", "b", "c"});
}

Corpus copies(VocabPtr vocab, const std::string& line, int n) {
  Corpus c{vocab, {}, Split::kTrain};
  for (int i = 0; i < n; ++i) c.sequences.push_back(encode(line, *vocab));
  return c;
}

NGramConfig fixed_config(int order, double delta = 0.01) {
  NGramConfig cfg;
  cfg.order = order;
  cfg.delta = delta;
  cfg.mode = LengthMode::kFixed;
  return cfg;
}

MarkovSource s2_source() {
  MarkovSource s;
  s.initial = {0.5, 0.3, 0.2};
  s.transition = {{0.2, 0.6, 0.2}, {0.3, 0.2, 0.5}, {0.6, 0.3, 0.1}};
  s.length = 4;
  return s;
}

// Every sequence of length 1..max_len over the ids a model may emit before
// EOS (content tokens and UNK).
void for_each_variable_sequence(const Vocab& v, int max_len,
                                const std::function<void(const Sequence&)>& f) {
  std::vector<TokenId> ids;
  std::function<void()> rec = [&] {
    if (!ids.empty()) f(Sequence(ids));
    if (static_cast<int>(ids.size()) == max_len) return;
    for (TokenId t = kUnk; t < v.size(); ++t) {
      ids.push_back(t);
      rec();
      ids.pop_back();
    }
  };
  rec();
}

}  // namespace

TEST_CASE("bigram on 100 copies of 'a b c' is nearly deterministic") {
  NGramConfig cfg;
  cfg.order = 2;
  cfg.delta = 0.01;
  const NGramLM lm = NGramLM::train(copies(abc(), "a b c", 100), cfg);
  const TokenId a = 4, b = 5;
  const std::vector<TokenId> prefix = {a};
  const auto dist = lm.next_distribution(prefix);
  CHECK(dist[b] >= 0.99);
  // Closed form over the support {a, b, c, UNK, EOS}.
  CHECK(dist[b] == doctest::Approx((100 + 0.01) / (100 + 5 * 0.01)).epsilon(1e-12));
  double total = 0.0;
  for (double p : dist) {
    total += p;
  }
  CHECK(std::abs(total - 1.0) <= 1e-9);
}

TEST_CASE("n-gram conditionals are positive and normalized in every context") {
  const Corpus train = synth_markov(s2_source(), 200, 3);
  for (int order : {1, 2, 3}) {
    const NGramLM lm = NGramLM::train(train, fixed_config(order));
    for (const auto& x : enumerate_domain(lm.vocab(), 3)) {
      const auto d = lm.next_distribution(x.span());
      double total = 0.0;
      for (TokenId t = 0; t < lm.vocab().size(); ++t) {
        if (lm.in_support(t, 3)) CHECK(d[t] > 0.0);
        total += d[t];
      }
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("n-gram probabilities follow the smoothed count formula") {
  const Corpus train = synth_markov(s2_source(), 300, 4);
  const NGramLM lm = NGramLM::train(train, fixed_config(2, 0.5));
  for (TokenId h = 4; h < 7; ++h) {
    const std::vector<TokenId> ctx = {h};
    const auto d = lm.next_distribution(ctx);
    for (TokenId w = 4; w < 7; ++w) {
      const double expected =
          (lm.count(ctx, w) + 0.5) / (lm.context_count(ctx) + 0.5 * 3);
      CHECK(d[w] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("uniform bigram over three tokens gives log(1/9)") {
  const VocabPtr v = abc();
  Corpus train{v, {}, Split::kTrain};
  for (const auto& x : enumerate_domain(*v, 2)) train.sequences.push_back(x);
  const NGramLM lm = NGramLM::train(train, fixed_config(2));
  CHECK(lm.seq_logprob(Sequence{4, 6}) == doctest::Approx(std::log(1.0 / 9)).epsilon(1e-12));
  CHECK(perplexity(lm, train) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("deterministic chain scores its sequence with probability one") {
  MarkovSource s;
  s.initial = {1.0, 0.0};
  s.transition = {{0.0, 1.0}, {1.0, 0.0}};
  s.length = 3;
  const SourceModel m(s);
  CHECK(std::abs(m.seq_logprob(Sequence{4, 5, 4})) <= 1e-12);
  CHECK(m.seq_logprob(Sequence{4, 4, 4}) == -INFINITY);
  const Corpus self{m.vocab_ptr(), {Sequence{4, 5, 4}}, Split::kTest};
  CHECK(perplexity(m, self) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uniform source has perplexity equal to its token count") {
  MarkovSource s;
  s.initial = {0.25, 0.25, 0.25, 0.25};
  s.transition.assign(4, std::vector<double>(4, 0.25));
  s.length = 3;
  const SourceModel m(s);
  const Corpus c = synth_markov(s, 50, 1);
  CHECK(std::abs(perplexity(m, c) - 4.0) <= 1e-6);
}

TEST_CASE("n-gram perplexity on a uniform source is near the entropy rate") {
  MarkovSource s;
  s.initial.assign(3, 1.0 / 3);
  s.transition.assign(3, std::vector<double>(3, 1.0 / 3));
  s.length = 4;
  const auto vocab = std::make_shared<const Vocab>(s.make_vocab());
  const Corpus train = synth_markov(s, 5000, 21, vocab);
  const Corpus valid = synth_markov(s, 2000, 22, vocab);
  const auto lm = train_mle(train, valid, GenConfig::from_json(
      {{"kind", "ngram"}, {"order", 2}, {"length_mode", "fixed"}}), 5);
  CHECK(std::abs(perplexity(*lm, valid) / 3.0 - 1.0) <= 0.05);
}

TEST_CASE("held-out perplexity is at least training perplexity") {
  const Scenario s = build_scenario(load_scenario("s3"), 7);
  const Corpus held_out = s.real_samples(2000, 99);
  CHECK(perplexity(*s.generator, held_out) >= perplexity(*s.generator, s.generator_train));
}

TEST_CASE("sequence probabilities agree with enumeration and sum to one") {
  const Scenario s = build_scenario(load_scenario("s2"), 7);
  const ExactDistribution p = enumerate_distribution(*s.generator);
  CHECK(p.size() == 81);
  CHECK(std::abs(p.total() - 1.0) <= 1e-6);
  for (size_t i = 0; i < p.size(); i += 7) {
    CHECK(std::abs(std::exp(s.generator->seq_logprob(p.domain[i])) - p.probs[i]) <= 1e-9);
  }
}

TEST_CASE("variable-length n-gram normalizes over all sequences up to max_len") {
  NGramConfig cfg;
  cfg.order = 2;
  cfg.max_len = 3;
  const NGramLM lm = NGramLM::train(copies(abc(), "a b c", 5), cfg);
  double total = 0.0;
  for_each_variable_sequence(lm.vocab(), 3, [&](const Sequence& x) {
    total += std::exp(lm.seq_logprob(x));
  });
  CHECK(std::abs(total - 1.0) <= 1e-9);
}

TEST_CASE("near-zero temperature decodes greedily") {
  const Scenario s = build_scenario(load_scenario("s2"), 7);
  const GenModel& g = *s.generator;
  Rng rng(3);
  const Sequence x = g.sample(SamplerConfig{1e-6, 4, 0}, rng);
  std::vector<TokenId> greedy;
  for (int t = 0; t < 4; ++t) {
    const auto d = g.next_distribution(greedy);
    greedy.push_back(static_cast<TokenId>(
        std::max_element(d.begin(), d.end()) - d.begin()));
  }
  CHECK(x.ids() == greedy);
}

TEST_CASE("property: argmax of the step distribution is temperature invariant") {
  const Scenario s = build_scenario(load_scenario("s3"), 7);
  const GenModel& g = *s.generator;
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TokenId> prefix;
    const int len = static_cast<int>(rng.below(4));
    for (int i = 0; i < len; ++i) prefix.push_back(4 + static_cast<TokenId>(rng.below(3)));
    const auto base = g.next_distribution(prefix, 1.0);
    const auto arg = std::max_element(base.begin(), base.end()) - base.begin();
    const double temp = rng.uniform(0.05, 5.0);
    const auto d = g.next_distribution(prefix, temp);
    CHECK(std::max_element(d.begin(), d.end()) - d.begin() == arg);
    double total = 0.0;
    for (double p : d) total += p;
    CHECK(std::abs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("first-token frequencies match the model marginal") {
  const Scenario s = build_scenario(load_scenario("s2"), 7);
  const auto marginal = s.generator->next_distribution({});
  std::vector<double> hist(s.vocab->size(), 0.0);
  Rng rng(5);
  const int n = 100000;
  for (int i = 0; i < n; ++i) hist[s.generator->sample(1.0, rng)[0]] += 1.0 / n;
  for (TokenId t = 4; t < 7; ++t) CHECK(std::abs(hist[t] - marginal[t]) <= 0.01);
}

TEST_CASE("same seed, same sample") {
  const Scenario s = build_scenario(load_scenario("s3"), 7);
  Rng a(8), b(8);
  for (int i = 0; i < 20; ++i) CHECK(s.generator->sample(1.1, a) == s.generator->sample(1.1, b));
}

TEST_CASE("bigram MLE converges to the source transitions") {
  const MarkovSource src = s2_source();
  const Corpus train = synth_markov(src, 100000, 12);
  const NGramLM lm = NGramLM::train(train, fixed_config(2));
  for (int i = 0; i < 3; ++i) {
    const std::vector<TokenId> ctx = {static_cast<TokenId>(4 + i)};
    const auto d = lm.next_distribution(ctx);
    double tv = 0.0;
    for (int j = 0; j < 3; ++j) tv += 0.5 * std::abs(d[4 + j] - src.transition[i][j]);
    CHECK(tv <= 0.02);
  }
}

TEST_CASE("training rejects empty corpora") {
  Corpus empty{abc(), {}, Split::kTrain};
  CHECK_THROWS_AS(NGramLM::train(empty, NGramConfig{}), InputError);
  CHECK_THROWS_AS(train_mle(empty, empty, GenConfig{}, 0), InputError);
}

TEST_CASE("sampler configuration requires positive temperature") {
  CHECK_THROWS_AS(SamplerConfig({0.0, 4, 0}).validate(), InputError);
  CHECK_THROWS_AS(SamplerConfig({-1.0, 4, 0}).validate(), InputError);
  CHECK_NOTHROW(SamplerConfig({0.5, 4, 0}).validate());
}

TEST_CASE("checkpoints round trip for every generator kind") {
  const auto dir = std::filesystem::temp_directory_path() / "filtergen_gen_test";
  std::filesystem::create_directories(dir);
  const Scenario s2 = build_scenario(load_scenario("s2"), 7);
  const Scenario s1 = build_scenario(load_scenario("s1"), 7);
  NeuralLMConfig ncfg;
  ncfg.embed_dim = 4;
  ncfg.hidden_dim = 5;
  ncfg.mode = LengthMode::kFixed;
  const NeuralLM neural(s2.vocab, ncfg, 4, 3);
  const std::vector<const GenModel*> models = {s2.generator.get(), s1.generator.get(), &neural};
  for (const GenModel* m : models) {
    const std::string path = (dir / (m->kind() + ".json")).string();
    save_gen_model(path, *m);
    const auto back = load_gen_model(path);
    CHECK(back->kind() == m->kind());
    CHECK(back->vocab() == m->vocab());
    const nlohmann::json ckpt = load_json(path);
    CHECK(ckpt["format_version"] == kCheckpointVersion);
    for (const auto& x : enumerate_domain(m->vocab(), m->length())) {
      CHECK(back->seq_logprob(x) == m->seq_logprob(x));
    }
  }
  nlohmann::json bad = gen_checkpoint(*s2.generator);
  bad["format_version"] = 99;
  CHECK_THROWS_AS(gen_from_checkpoint(bad), InputError);
}

TEST_CASE("generator configs round trip and reject unknown keys") {
  GenConfig g;
  g.kind = "neural";
  g.neural.hidden_dim = 7;
  const GenConfig back = GenConfig::from_json(g.to_json());
  CHECK(back.kind == "neural");
  CHECK(back.neural.hidden_dim == 7);
  CHECK_THROWS_AS(GenConfig::from_json({{"kind", "ngram"}, {"ordr", 2}}), InputError);
  CHECK_THROWS_AS(GenConfig::from_json({{"kind", "lstm"}}), InputError);
}
