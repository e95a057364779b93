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

// Sample-quality and diversity metrics: BLEU, self-BLEU, forward and reverse
// language-model scores, sentence embeddings and the Frechet distance
// between them.

#ifndef FILTERGEN_METRICS_H_
#define FILTERGEN_METRICS_H_

#include <string>

#include "filtergen/genmodel.h"
#include "filtergen/models.h"
#include "filtergen/neural_lm.h"
#include "filtergen/params.h"

namespace filtergen {

struct BleuConfig {
  int order = 5;
  double epsilon = 1e-9;

  void validate() const;
};

// Mean sentence BLEU of each hypothesis against the whole reference set.
// Orders longer than a hypothesis are left out of its geometric mean; zero
// match counts are replaced by epsilon.
double bleu(const Corpus& hypotheses, const Corpus& references,
            const BleuConfig& cfg = {});

// Sentence BLEU of one hypothesis.
double sentence_bleu(const Sequence& hypothesis, const Corpus& references,
                     const BleuConfig& cfg = {});

// Mean BLEU of each sample against all the others. Needs >= 2 samples.
double self_bleu(const Corpus& samples, const BleuConfig& cfg = {});

// Mean over samples of -log p(x) / scored events under `oracle_lm`.
double lm_score(const GenModel& oracle_lm, const Corpus& samples);

inline constexpr size_t kMinReverseSamples = 1000;

// Trains a fresh model with `config` on the samples and returns its
// lm_score on real_test.
double reverse_lm_score(const Corpus& samples, const Corpus& real_test,
                        const GenConfig& config, uint64_t seed,
                        size_t min_samples = kMinReverseSamples);

// Sentence embedding = mean of per-token vectors.
class EmbeddingModel {
 public:
  // PPMI of symmetric-window co-occurrences, factorized by a symmetric
  // eigendecomposition; keeps min(dim, factorized tokens) components. Only
  // the kMaxFactorized most frequent tokens get vectors; the others are
  // skipped when averaging.
  static constexpr int kMaxFactorized = 2000;
  static EmbeddingModel fit_ppmi_svd(const Corpus& corpus, int dim = 64,
                                     int window = 2);
  static EmbeddingModel from_neural_lm(const NeuralLM& lm);
  // Rows of `token_vectors` are indexed by token id; `known` marks the rows
  // that take part in averages (all of them when empty).
  EmbeddingModel(VocabPtr vocab, RowMatrix token_vectors,
                 std::string provenance, std::vector<bool> known = {});

  int dim() const { return static_cast<int>(table_.cols()); }
  const std::string& provenance() const { return provenance_; }
  const RowMatrix& token_vectors() const { return table_; }

  Eigen::VectorXd embed(const Sequence& seq) const;

 private:
  VocabPtr vocab_;
  RowMatrix table_;
  std::string provenance_;
  std::vector<bool> known_;
};

// One row per sequence.
RowMatrix embed(const Corpus& samples, const EmbeddingModel& em);

// ||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^(1/2)). Needs at least
// dim + 1 rows in each set.
double fed(const RowMatrix& real_emb, const RowMatrix& gen_emb);

}  // namespace filtergen

#endif  // FILTERGEN_METRICS_H_
