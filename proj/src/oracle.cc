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

#include "filtergen/oracle.h"

#include <cmath>
#include <limits>
#include <numbers>

namespace filtergen {

size_t ExactDistribution::index_of(const Sequence& seq) const {
  if (seq.size() != length) return size();
  const int k = num_tokens();
  size_t index = 0;
  for (int t = 0; t < seq.size(); ++t) {
    const int s = seq[t] - kNumReserved;
    if (s < 0 || s >= k) return size();
    index = index * k + s;
  }
  return index;
}

double ExactDistribution::prob(const Sequence& seq) const {
  const size_t i = index_of(seq);
  return i < size() ? probs[i] : 0.0;
}

double ExactDistribution::total() const { return pairwise_sum(probs); }

void ExactDistribution::validate(double tol) const {
  if (domain.size() != probs.size()) {
    throw InputError("ExactDistribution: domain/probs size mismatch");
  }
  for (double p : probs) {
    if (!(p >= 0.0)) throw InputError("ExactDistribution: negative mass");
  }
  if (std::abs(total() - 1.0) > tol) {
    throw InputError("ExactDistribution: probabilities do not sum to 1");
  }
}

bool ExactDistribution::same_domain(const ExactDistribution& other) const {
  return length == other.length && size() == other.size() &&
         *vocab == *other.vocab;
}

std::vector<Sequence> enumerate_domain(const Vocab& vocab, int length) {
  const int k = vocab.content_size();
  if (k < 1 || length < 1) throw InputError("enumerate: empty domain");
  double count = std::pow(static_cast<double>(k), length);
  if (count > static_cast<double>(kMaxEnumeration)) {
    throw InputError("enumerate: domain of " + std::to_string(count) +
                     " sequences is too large");
  }
  const auto n = static_cast<size_t>(count);
  std::vector<Sequence> domain;
  domain.reserve(n);
  std::vector<TokenId> ids(length);
  for (size_t i = 0; i < n; ++i) {
    size_t rest = i;
    for (int t = length - 1; t >= 0; --t) {
      ids[t] = static_cast<TokenId>(rest % k) + kNumReserved;
      rest /= k;
    }
    domain.emplace_back(ids);
  }
  return domain;
}

ExactDistribution enumerate_distribution(const GenModel& model) {
  if (model.mode() != LengthMode::kFixed) {
    throw InputError("enumerate_distribution: model must be fixed-length");
  }
  ExactDistribution dist{model.vocab_ptr(), model.length(),
                         enumerate_domain(model.vocab(), model.length()), {}};
  dist.probs.reserve(dist.domain.size());
  for (const auto& seq : dist.domain) {
    dist.probs.push_back(std::exp(model.seq_logprob(seq)));
  }
  return dist;
}

ExactDistribution enumerate_distribution(const MarkovSource& source,
                                         VocabPtr vocab) {
  source.validate();
  if (!vocab) vocab = std::make_shared<const Vocab>(source.make_vocab());
  ExactDistribution dist{vocab, source.length,
                         enumerate_domain(*vocab, source.length), {}};
  dist.probs.reserve(dist.domain.size());
  for (const auto& seq : dist.domain) {
    dist.probs.push_back(exact_prob(source, seq));
  }
  return dist;
}

ExactDistribution empirical_distribution(const ExactDistribution& like,
                                         const Corpus& samples) {
  ExactDistribution out{like.vocab, like.length, like.domain,
                        std::vector<double>(like.size(), 0.0)};
  size_t counted = 0;
  for (const auto& s : samples.sequences) {
    const size_t i = like.index_of(s);
    if (i < like.size()) {
      out.probs[i] += 1.0;
      ++counted;
    }
  }
  if (counted == 0) throw DegenerateError("empirical: no sample in domain");
  for (double& p : out.probs) p /= static_cast<double>(counted);
  return out;
}

namespace {

void require_same_domain(const ExactDistribution& a,
                         const ExactDistribution& b) {
  if (!a.same_domain(b)) throw InputError("distributions differ in domain");
}

void require_aligned(const ExactDistribution& p, std::span<const double> d) {
  if (d.size() != p.size()) {
    throw InputError("discriminator table does not match the domain");
  }
}

}  // namespace

std::vector<double> optimal_discriminator(const ExactDistribution& p_r,
                                          const ExactDistribution& p_theta) {
  require_same_domain(p_r, p_theta);
  std::vector<double> d(p_r.size());
  for (size_t i = 0; i < d.size(); ++i) {
    const double denom = p_r.probs[i] + p_theta.probs[i];
    d[i] = denom > 0.0 ? p_r.probs[i] / denom : 0.5;
  }
  return d;
}

TableDiscriminator::TableDiscriminator(ExactDistribution domain,
                                       std::vector<double> values)
    : domain_(std::move(domain)), values_(std::move(values)) {
  require_aligned(domain_, values_);
}

double TableDiscriminator::predict(const Sequence& seq) const {
  const size_t i = domain_.index_of(seq);
  if (i >= values_.size()) {
    throw InputError("TableDiscriminator: sequence outside the domain");
  }
  return values_[i];
}

std::vector<double> tabulate(const Discriminator& disc,
                             const ExactDistribution& domain) {
  return disc.predict_all(domain.domain);
}

double exact_acceptance(const ExactDistribution& p_theta,
                        std::span<const double> d, double c, double u_c) {
  require_aligned(p_theta, d);
  const FilterParams params{c, u_c};
  params.validate();
  std::vector<double> mass(p_theta.size());
  for (size_t i = 0; i < mass.size(); ++i) {
    mass[i] = acceptance_probability(d[i], params) * p_theta.probs[i];
  }
  return pairwise_sum(mass);
}

ExactFiltered exact_filtered_distribution(const ExactDistribution& p_theta,
                                          std::span<const double> d, double c,
                                          double u_c) {
  require_aligned(p_theta, d);
  const FilterParams params{c, u_c};
  params.validate();
  ExactFiltered out;
  out.dist = ExactDistribution{p_theta.vocab, p_theta.length, p_theta.domain,
                               std::vector<double>(p_theta.size())};
  out.acceptance.resize(p_theta.size());
  for (size_t i = 0; i < p_theta.size(); ++i) {
    out.acceptance[i] = acceptance_probability(d[i], params);
    out.dist.probs[i] = out.acceptance[i] * p_theta.probs[i];
  }
  out.c_exact = pairwise_sum(out.dist.probs);
  if (!(out.c_exact > 0.0)) {
    throw DegenerateError("exact_filtered_distribution: zero acceptance");
  }
  for (double& p : out.dist.probs) p /= out.c_exact;
  return out;
}

ExactDistribution exact_rejected_distribution(const ExactDistribution& p_theta,
                                              std::span<const double> d,
                                              double c, double u_c) {
  require_aligned(p_theta, d);
  const FilterParams params{c, u_c};
  params.validate();
  ExactDistribution out{p_theta.vocab, p_theta.length, p_theta.domain,
                        std::vector<double>(p_theta.size())};
  for (size_t i = 0; i < p_theta.size(); ++i) {
    out.probs[i] =
        (1.0 - acceptance_probability(d[i], params)) * p_theta.probs[i];
  }
  const double z = pairwise_sum(out.probs);
  if (!(z > 0.0)) throw DegenerateError("exact rejected: nothing rejected");
  for (double& p : out.probs) p /= z;
  return out;
}

nlohmann::json ExactUc::to_json() const {
  return {{"u_c", u_c},
          {"acceptance", acceptance},
          {"min_acceptance", min_acceptance},
          {"max_acceptance", max_acceptance},
          {"achievable", achievable}};
}

ExactUc exact_uc(const ExactDistribution& p_theta, std::span<const double> d,
                 double c) {
  if (!(c > 0.0 && c <= 1.0)) throw InputError("exact_uc: c not in (0, 1]");
  require_aligned(p_theta, d);
  ExactUc out;
  out.max_acceptance = exact_acceptance(p_theta, d, c, 0.0);
  out.min_acceptance = exact_acceptance(p_theta, d, c, 1.0);
  out.achievable = c >= out.min_acceptance - 1e-12;
  if (c >= 1.0) {
    out.u_c = 0.0;
    out.acceptance = out.max_acceptance;
    return out;
  }
  if (!out.achievable) {
    out.u_c = 1.0;
    out.acceptance = out.min_acceptance;
    return out;
  }

  constexpr int kGrid = 10000;
  int best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  double best_acc = out.max_acceptance;
  for (int g = 0; g <= kGrid; ++g) {
    const double u = static_cast<double>(g) / kGrid;
    const double acc = exact_acceptance(p_theta, d, c, u);
    const double gap = std::abs(acc - c);
    if (gap < best_gap - 1e-15) {
      best_gap = gap;
      best = g;
      best_acc = acc;
    }
  }
  // Acceptance is a step function of the boundary; slide towards the left
  // end of the optimal step between the previous grid point and this one.
  double hi = static_cast<double>(best) / kGrid;
  if (best > 0) {
    double lo = static_cast<double>(best - 1) / kGrid;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (std::abs(exact_acceptance(p_theta, d, c, mid) - best_acc) <= 1e-15) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }
  out.u_c = hi;
  out.acceptance = exact_acceptance(p_theta, d, c, hi);
  return out;
}

double tv_distance(const ExactDistribution& p, const ExactDistribution& q) {
  require_same_domain(p, q);
  std::vector<double> diff(p.size());
  for (size_t i = 0; i < diff.size(); ++i) {
    diff[i] = std::abs(p.probs[i] - q.probs[i]);
  }
  return 0.5 * pairwise_sum(diff);
}

double sampling_tv_floor(const ExactDistribution& p, size_t n) {
  if (n == 0) throw InputError("sampling_tv_floor: n must be positive");
  std::vector<double> terms(p.size());
  for (size_t i = 0; i < terms.size(); ++i) {
    const double pi = p.probs[i];
    terms[i] = std::sqrt(2.0 * pi * (1.0 - pi) /
                         (std::numbers::pi * static_cast<double>(n)));
  }
  return 0.5 * pairwise_sum(terms);
}

size_t samples_for_tv_floor(const ExactDistribution& p, double floor,
                            size_t min_n) {
  if (floor <= 0.0 || min_n == 0) {
    throw InputError("samples_for_tv_floor: floor and min_n must be positive");
  }
  // The floor scales as 1 / sqrt(n).
  const double at_min = sampling_tv_floor(p, min_n);
  if (at_min <= floor) return min_n;
  const double ratio = (at_min / floor) * (at_min / floor);
  return static_cast<size_t>(std::ceil(ratio)) * min_n;
}

double kl_divergence(const ExactDistribution& p, const ExactDistribution& q) {
  require_same_domain(p, q);
  std::vector<double> terms(p.size(), 0.0);
  for (size_t i = 0; i < terms.size(); ++i) {
    if (p.probs[i] <= 0.0) continue;
    if (q.probs[i] <= 0.0) return std::numeric_limits<double>::infinity();
    terms[i] = p.probs[i] * std::log(p.probs[i] / q.probs[i]);
  }
  return pairwise_sum(terms);
}

double js_divergence(const ExactDistribution& p, const ExactDistribution& q) {
  require_same_domain(p, q);
  ExactDistribution m{p.vocab, p.length, p.domain,
                      std::vector<double>(p.size())};
  for (size_t i = 0; i < m.size(); ++i) {
    m.probs[i] = 0.5 * (p.probs[i] + q.probs[i]);
  }
  return 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m);
}

}  // namespace filtergen
