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

#include "filtergen/metrics.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>

namespace filtergen {

void BleuConfig::validate() const {
  if (order < 1) throw InputError("BLEU order must be >= 1");
  if (!(epsilon > 0.0)) throw InputError("BLEU epsilon must be > 0");
}

namespace {

using NGram = std::u32string;

NGram ngram_at(const Sequence& s, int start, int k) {
  NGram g(static_cast<size_t>(k), U'\0');
  for (int i = 0; i < k; ++i) g[i] = static_cast<char32_t>(s[start + i]);
  return g;
}

std::unordered_map<NGram, int> ngram_counts(const Sequence& s, int k) {
  std::unordered_map<NGram, int> counts;
  for (int i = 0; i + k <= s.size(); ++i) ++counts[ngram_at(s, i, k)];
  return counts;
}

// Largest and second-largest per-reference count of one n-gram.
struct TopCounts {
  int best = 0;
  int owners = 0;
  int second = 0;

  void add(int v) {
    if (v > best) {
      second = best;
      best = v;
      owners = 1;
    } else if (v == best) {
      ++owners;
    } else if (v > second) {
      second = v;
    }
  }

  // Max over references when one reference holding `own` is left out.
  int excluding(int own) const {
    return own == best && owners == 1 ? second : best;
  }
};

class ReferenceIndex {
 public:
  ReferenceIndex(const Corpus& refs, int order) : by_order_(order) {
    for (const auto& r : refs.sequences) {
      ++lengths_[r.size()];
      for (int k = 1; k <= order; ++k) {
        for (const auto& [g, n] : ngram_counts(r, k)) by_order_[k - 1][g].add(n);
      }
    }
  }

  // `exclude_self` drops one reference equal to the hypothesis.
  double score(const Sequence& hyp, const BleuConfig& cfg,
               bool exclude_self) const {
    const int len = hyp.size();
    const int orders = std::min(cfg.order, len);
    std::vector<double> logs(orders);
    for (int k = 1; k <= orders; ++k) {
      const auto& table = by_order_[k - 1];
      int matches = 0;
      for (const auto& [g, n] : ngram_counts(hyp, k)) {
        auto it = table.find(g);
        if (it == table.end()) continue;
        const int ref = exclude_self ? it->second.excluding(n) : it->second.best;
        matches += std::min(n, ref);
      }
      const double total = std::max(1, len - k + 1);
      const double num = matches > 0 ? matches : cfg.epsilon;
      logs[k - 1] = std::log(num / total);
    }
    const double mean_log = pairwise_sum(logs) / orders;
    return brevity_penalty(len, exclude_self) * std::exp(mean_log);
  }

 private:
  double brevity_penalty(int len, bool exclude_self) const {
    int best = -1;
    for (const auto& [r, n] : lengths_) {
      const int available = n - (exclude_self && r == len ? 1 : 0);
      if (available <= 0) continue;
      if (best < 0 || std::abs(r - len) < std::abs(best - len)) best = r;
    }
    if (best < 0 || len > best) return 1.0;
    return std::exp(1.0 - static_cast<double>(best) / len);
  }

  std::vector<std::unordered_map<NGram, TopCounts>> by_order_;
  std::map<int, int> lengths_;
};

}  // namespace

double sentence_bleu(const Sequence& hypothesis, const Corpus& references,
                     const BleuConfig& cfg) {
  cfg.validate();
  if (references.empty()) throw InputError("bleu: no references");
  return ReferenceIndex(references, cfg.order).score(hypothesis, cfg, false);
}

double bleu(const Corpus& hypotheses, const Corpus& references,
            const BleuConfig& cfg) {
  cfg.validate();
  if (hypotheses.empty() || references.empty()) {
    throw InputError("bleu: hypotheses and references must be non-empty");
  }
  const ReferenceIndex index(references, cfg.order);
  std::vector<double> scores;
  scores.reserve(hypotheses.size());
  for (const auto& h : hypotheses.sequences) {
    scores.push_back(index.score(h, cfg, false));
  }
  return pairwise_sum(scores) / static_cast<double>(scores.size());
}

double self_bleu(const Corpus& samples, const BleuConfig& cfg) {
  cfg.validate();
  if (samples.size() < 2) throw InputError("self_bleu: need >= 2 samples");
  const ReferenceIndex index(samples, cfg.order);
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& s : samples.sequences) {
    scores.push_back(index.score(s, cfg, true));
  }
  return pairwise_sum(scores) / static_cast<double>(scores.size());
}

double lm_score(const GenModel& oracle_lm, const Corpus& samples) {
  if (samples.empty()) throw InputError("lm_score: no samples");
  std::vector<double> per_sample;
  per_sample.reserve(samples.size());
  for (const auto& s : samples.sequences) {
    per_sample.push_back(-oracle_lm.seq_logprob(s) /
                         std::max(1, oracle_lm.scored_events(s)));
  }
  return pairwise_sum(per_sample) / static_cast<double>(per_sample.size());
}

double reverse_lm_score(const Corpus& samples, const Corpus& real_test,
                        const GenConfig& config, uint64_t seed,
                        size_t min_samples) {
  if (samples.size() < min_samples) {
    throw InputError("reverse_lm_score: " + std::to_string(samples.size()) +
                     " samples, need at least " + std::to_string(min_samples));
  }
  auto model = train_mle(samples, Corpus{samples.vocab, {}, Split::kValid},
                         config, derive_seed(seed, "reverse-lm"));
  return lm_score(*model, real_test);
}

EmbeddingModel::EmbeddingModel(VocabPtr vocab, RowMatrix token_vectors,
                               std::string provenance, std::vector<bool> known)
    : vocab_(std::move(vocab)),
      table_(std::move(token_vectors)),
      provenance_(std::move(provenance)),
      known_(std::move(known)) {
  if (table_.rows() != vocab_->size()) {
    throw InputError("EmbeddingModel: one row per vocabulary id expected");
  }
  if (known_.empty()) known_.assign(table_.rows(), true);
  if (known_.size() != static_cast<size_t>(table_.rows())) {
    throw InputError("EmbeddingModel: mask size mismatch");
  }
  if (!table_.allFinite()) throw InputError("EmbeddingModel: non-finite entry");
}

EmbeddingModel EmbeddingModel::fit_ppmi_svd(const Corpus& corpus, int dim,
                                            int window) {
  if (dim < 1 || window < 1) throw InputError("ppmi-svd: dim and window >= 1");
  if (corpus.empty()) throw InputError("ppmi-svd: empty corpus");
  const int v = corpus.vocab->size();

  std::vector<size_t> freq(v, 0);
  for (const auto& s : corpus.sequences) {
    for (TokenId id : s.ids()) ++freq[id];
  }
  std::vector<int> order;
  for (int id = 0; id < v; ++id) {
    if (freq[id] > 0) order.push_back(id);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return freq[a] > freq[b]; });
  if (order.size() > static_cast<size_t>(kMaxFactorized)) {
    order.resize(kMaxFactorized);
  }
  std::sort(order.begin(), order.end());
  std::vector<int> slot(v, -1);
  for (size_t i = 0; i < order.size(); ++i) slot[order[i]] = static_cast<int>(i);
  const int n = static_cast<int>(order.size());

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : corpus.sequences) {
    for (int i = 0; i < s.size(); ++i) {
      const int a = slot[s[i]];
      if (a < 0) continue;
      const int lo = std::max(0, i - window);
      const int hi = std::min(s.size() - 1, i + window);
      for (int j = lo; j <= hi; ++j) {
        const int b = slot[s[j]];
        if (j != i && b >= 0) counts(a, b) += 1.0;
      }
    }
  }
  const Eigen::VectorXd row = counts.rowwise().sum();
  const double total = row.sum();
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (counts(a, b) <= 0.0) continue;
      ppmi(a, b) =
          std::max(0.0, std::log(counts(a, b) * total / (row(a) * row(b))));
    }
  }

  const int k = std::min(dim, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ppmi);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(eig.eigenvalues()(a)) > std::abs(eig.eigenvalues()(b));
  });
  RowMatrix table = RowMatrix::Zero(v, k);
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd u = eig.eigenvectors().col(idx[c]);
    Eigen::Index pivot = 0;
    u.cwiseAbs().maxCoeff(&pivot);
    if (u(pivot) < 0.0) u = -u;
    u *= std::sqrt(std::abs(eig.eigenvalues()(idx[c])));
    for (int a = 0; a < n; ++a) table(order[a], c) = u(a);
  }
  std::vector<bool> known(v, false);
  for (int id : order) known[id] = true;
  return EmbeddingModel(corpus.vocab, std::move(table), "ppmi-svd",
                        std::move(known));
}

EmbeddingModel EmbeddingModel::from_neural_lm(const NeuralLM& lm) {
  return EmbeddingModel(lm.vocab_ptr(), lm.embedding(), "neural-lm-mean");
}

Eigen::VectorXd EmbeddingModel::embed(const Sequence& seq) const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim());
  int used = 0;
  for (TokenId id : seq.ids()) {
    if (id < 0 || id >= table_.rows() || !known_[id]) continue;
    sum += table_.row(id).transpose();
    ++used;
  }
  return used ? Eigen::VectorXd(sum / used) : sum;
}

RowMatrix embed(const Corpus& samples, const EmbeddingModel& em) {
  RowMatrix out(static_cast<Eigen::Index>(samples.size()), em.dim());
  for (size_t i = 0; i < samples.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        em.embed(samples.sequences[i]).transpose();
  }
  return out;
}

namespace {

Eigen::MatrixXd covariance(const RowMatrix& x, const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() *
         eig.eigenvectors().transpose();
}

bool near_singular(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m,
                                                     Eigen::EigenvaluesOnly);
  const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  return eig.eigenvalues().minCoeff() <= 1e-10 * top;
}

}  // namespace

double fed(const RowMatrix& real_emb, const RowMatrix& gen_emb) {
  const Eigen::Index d = real_emb.cols();
  if (d < 1 || gen_emb.cols() != d) {
    throw InputError("fed: embedding dimensions differ");
  }
  if (real_emb.rows() < d + 1 || gen_emb.rows() < d + 1) {
    throw InputError("fed: need at least " + std::to_string(d + 1) +
                     " rows per set");
  }
  const Eigen::VectorXd mu_r = real_emb.colwise().mean().transpose();
  const Eigen::VectorXd mu_g = gen_emb.colwise().mean().transpose();
  Eigen::MatrixXd s_r = covariance(real_emb, mu_r);
  Eigen::MatrixXd s_g = covariance(gen_emb, mu_g);
  if (near_singular(s_r) || near_singular(s_g)) {
    s_r.diagonal().array() += 1e-6;
    s_g.diagonal().array() += 1e-6;
  }
  const Eigen::MatrixXd root_r = psd_sqrt(s_r);
  Eigen::MatrixXd inner = root_r * s_g * root_r;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner,
                                                     Eigen::EigenvaluesOnly);
  const double trace_sqrt = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu_r - mu_g).squaredNorm() + s_r.trace() + s_g.trace() -
                       2.0 * trace_sqrt;
  return std::max(0.0, value);
}

}  // namespace filtergen
