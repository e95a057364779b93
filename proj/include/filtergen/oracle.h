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

// Brute-force ground truth on small fixed-length domains: explicit sequence
// distributions, the optimal discriminator, and the exact effect of the
// rejection filter.

#ifndef FILTERGEN_ORACLE_H_
#define FILTERGEN_ORACLE_H_

#include "filtergen/disc.h"
#include "filtergen/filter.h"
#include "filtergen/genmodel.h"

namespace filtergen {

inline constexpr size_t kMaxEnumeration = 1000000;

// Probabilities over every length-L sequence of content tokens, in
// lexicographic id order.
struct ExactDistribution {
  VocabPtr vocab;
  int length = 0;
  std::vector<Sequence> domain;
  std::vector<double> probs;

  size_t size() const { return probs.size(); }
  int num_tokens() const { return vocab->content_size(); }
  // Position of seq in the domain, or size() if it is not in it.
  size_t index_of(const Sequence& seq) const;
  double prob(const Sequence& seq) const;
  double total() const;
  // Throws unless probs sum to 1 within tol and are non-negative.
  void validate(double tol = 1e-9) const;
  bool same_domain(const ExactDistribution& other) const;
};

// All |V|^L sequences over the content tokens. Throws if too large.
std::vector<Sequence> enumerate_domain(const Vocab& vocab, int length);

// The model must be in fixed-length mode.
ExactDistribution enumerate_distribution(const GenModel& model);
ExactDistribution enumerate_distribution(const MarkovSource& source,
                                         VocabPtr vocab = nullptr);

// Normalized histogram of `samples` over the domain of `like`. Samples
// outside the domain are ignored.
ExactDistribution empirical_distribution(const ExactDistribution& like,
                                         const Corpus& samples);

// D*(x) = p_r(x) / (p_r(x) + p_g(x)); 0.5 where both vanish.
std::vector<double> optimal_discriminator(const ExactDistribution& p_r,
                                          const ExactDistribution& p_theta);

// Scores on a fixed domain, e.g. D* or a trained model tabulated.
class TableDiscriminator : public Discriminator {
 public:
  TableDiscriminator(ExactDistribution domain, std::vector<double> values);
  // Throws InputError for sequences outside the domain.
  double predict(const Sequence& seq) const override;
  const std::vector<double>& values() const { return values_; }

 private:
  ExactDistribution domain_;
  std::vector<double> values_;
};

// disc evaluated on every domain sequence.
std::vector<double> tabulate(const Discriminator& disc,
                             const ExactDistribution& domain);

struct ExactFiltered {
  ExactDistribution dist;
  double c_exact = 0.0;
  std::vector<double> acceptance;  // S(x) per domain entry
};

// c_exact = sum_x S(x) p(x); p_new(x) = S(x) p(x) / c_exact.
// Throws DegenerateError when c_exact is 0.
ExactFiltered exact_filtered_distribution(const ExactDistribution& p_theta,
                                          std::span<const double> d, double c,
                                          double u_c);

// Exact acceptance ratio sum_x S(x) p(x).
double exact_acceptance(const ExactDistribution& p_theta,
                        std::span<const double> d, double c, double u_c);

// Distribution of the rejected stream, proportional to (1 - S(x)) p(x).
ExactDistribution exact_rejected_distribution(const ExactDistribution& p_theta,
                                              std::span<const double> d,
                                              double c, double u_c);

struct ExactUc {
  double u_c = 0.0;
  double acceptance = 1.0;      // exact acceptance at u_c
  double min_acceptance = 1.0;  // at u_c = 1
  double max_acceptance = 1.0;  // at u_c = 0
  bool achievable = true;       // c within [min, max]

  nlohmann::json to_json() const;
};

// Boundary whose exact acceptance is closest to c: a 1e-4 grid search
// followed by bisection towards the smallest boundary of the optimal
// plateau. When c is below the acceptance floor, returns u_c = 1 and
// clears `achievable`.
ExactUc exact_uc(const ExactDistribution& p_theta, std::span<const double> d,
                 double c);

double tv_distance(const ExactDistribution& p, const ExactDistribution& q);
// Approximate expected TV between p and the empirical distribution of n
// i.i.d. draws from p: 0.5 * sum sqrt(2 p (1 - p) / (pi n)).
double sampling_tv_floor(const ExactDistribution& p, size_t n);
// Smallest n >= min_n (in multiples of min_n) whose sampling floor is at
// most `floor`.
size_t samples_for_tv_floor(const ExactDistribution& p, double floor,
                            size_t min_n);
// Natural-log Jensen-Shannon divergence, in [0, ln 2].
double js_divergence(const ExactDistribution& p, const ExactDistribution& q);
// KL(p || q); +inf if p puts mass where q has none.
double kl_divergence(const ExactDistribution& p, const ExactDistribution& q);

}  // namespace filtergen

#endif  // FILTERGEN_ORACLE_H_
