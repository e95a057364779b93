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

// Discriminator-driven rejection filter placed after a generator.
//
// A generated sequence x with discriminator score d = D(x) is accepted with
// probability
//
//   S(d) = 1                          if d >= u_c
//        = min(1, c * d / (1 - d))    otherwise
//
// where c is the target acceptance ratio and u_c the sampling boundary. If D
// is the Bayes-optimal discriminator p_r / (p_r + p_g), accepted sequences
// below the boundary follow the real distribution exactly.

#ifndef FILTERGEN_FILTER_H_
#define FILTERGEN_FILTER_H_

#include <stdexcept>

#include "filtergen/disc.h"
#include "filtergen/genmodel.h"

namespace filtergen {

struct FilterParams {
  double c = 1.0;    // target acceptance ratio, (0, 1]
  double u_c = 0.0;  // sampling boundary, [0, 1]

  void validate() const;
  bool is_identity() const { return c >= 1.0 && u_c <= 0.0; }
};

inline constexpr double kMaxOddsRatio = 1e9;

// S(d) for d in (0, 1). Throws InputError otherwise.
double filter_prob(double d, double c, double u_c);

// Same rule extended to the closed interval: d = 0 gives 0 (unless u_c is
// 0), d = 1 gives 1. Used for exact discriminators that can reach 0 or 1.
double acceptance_probability(double d, const FilterParams& params);

// Draws z ~ U[0, 1) from `rng` and accepts iff d >= u_c or z <= S(d).
// Exactly one uniform is consumed per call.
bool accept(double d, const FilterParams& params, Rng& rng);
bool accept(const Sequence& seq, const Discriminator& disc,
            const FilterParams& params, Rng& rng);

struct EstimateConfig {
  int samples_per_round = 1000;
  int rounds = 100;
  double step = 0.01;
  double init = 0.5;
  int average_last = 10;

  void validate() const;
  nlohmann::json to_json() const;
  static EstimateConfig from_json(const nlohmann::json& j);
};

struct UcEstimate {
  double c = 1.0;
  double u_c = 0.0;
  std::vector<double> trace_uc;          // boundary used in each round
  std::vector<double> trace_acceptance;  // empirical acceptance per round
  // Empirical acceptance of one extra round at the returned u_c.
  double final_acceptance = 1.0;

  nlohmann::json to_json() const;
};

// Iterative boundary search: each round draws samples_per_round sequences,
// measures the empirical acceptance under the current boundary, then moves
// the boundary down by `step` if the acceptance is below c and up otherwise
// (clamped to [0, 1]). The result averages the boundaries of the last
// `average_last` rounds. c = 1 returns the identity boundary 0.
UcEstimate estimate_uc(const GenModel& gen, const Discriminator& disc,
                       double c, const EstimateConfig& config,
                       const SamplerConfig& sampling);

struct FilterStats {
  double target_c = 1.0;
  size_t attempts = 0;
  size_t acceptances = 0;
  double sum_d_accepted = 0.0;
  double sum_d_rejected = 0.0;

  double acceptance_ratio() const;
  double mean_d_accepted() const;
  double mean_d_rejected() const;
  double abs_error() const;  // |acceptance_ratio - target_c|

  void merge(const FilterStats& other);
  nlohmann::json to_json() const;
};

struct FilteredSamples {
  Corpus accepted;
  Corpus rejected;
  FilterStats stats;
};

// Raised when the attempt budget runs out before n acceptances.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, FilteredSamples partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const FilteredSamples& partial() const { return partial_; }

 private:
  FilteredSamples partial_;
};

// Base generator followed by the rejection filter.
class FilteredGenerator {
 public:
  FilteredGenerator(GenModelPtr base, DiscriminatorPtr disc,
                    FilterParams params,
                    size_t max_attempts_per_sample = 10000);

  struct Attempt {
    Sequence seq;
    double d;
    bool accepted;
  };

  // One generate-then-test step. Generation and the acceptance draw use
  // separate streams so an identity filter reproduces the base stream.
  Attempt attempt(const SamplerConfig& sampling, Rng& gen_rng,
                  Rng& accept_rng) const;

  const GenModel& base() const { return *base_; }
  const Discriminator& disc() const { return *disc_; }
  const FilterParams& params() const { return params_; }
  size_t max_attempts_per_sample() const { return max_attempts_; }

 private:
  GenModelPtr base_;
  DiscriminatorPtr disc_;
  FilterParams params_;
  size_t max_attempts_;
};

// Repeats attempts until n acceptances. The generation stream is seeded
// with sampling.seed, as a plain generator would be. workers > 1 splits the
// work over independently seeded streams and concatenates in worker order.
// Throws BudgetError (with partial results) after
// max_attempts_per_sample * n attempts.
FilteredSamples sample_filtered(const FilteredGenerator& fg, size_t n,
                                const SamplerConfig& sampling,
                                int workers = 1, bool keep_rejected = true);

// Infinite streams of accepted / rejected sequences, for training
// discriminators against the filtered generator.
SampleSource accepted_source(const FilteredGenerator& fg,
                             const SamplerConfig& sampling, uint64_t seed);
SampleSource rejected_source(const FilteredGenerator& fg,
                             const SamplerConfig& sampling, uint64_t seed);

}  // namespace filtergen

#endif  // FILTERGEN_FILTER_H_
