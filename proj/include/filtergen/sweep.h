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

// Classification-difficulty analyses and the temperature sweep.

#ifndef FILTERGEN_SWEEP_H_
#define FILTERGEN_SWEEP_H_

#include <optional>
#include <string>
#include <vector>

#include "filtergen/disc.h"
#include "filtergen/filter.h"
#include "filtergen/metrics.h"

namespace filtergen {

struct ClassifierResult {
  double error_rate = 0.0;  // balanced, on held-out sets
  DiscTrainReport report;
};

// Trains a fresh discriminator on `real_train` against `generated` and
// measures its error on `real_test` plus an equal number of new generated
// sequences.
ClassifierResult classification_error(const Corpus& real_train,
                                      const Corpus& real_test,
                                      const SampleSource& generated,
                                      const TextCNNConfig& config,
                                      uint64_t seed);

struct BucketError {
  int min_len = 0;
  int max_len = 0;
  double error_rate = 0.0;
};

// Lengths 1..max_len split into `buckets` contiguous ranges.
std::vector<std::pair<int, int>> length_buckets(int max_len, int buckets);

// For each bucket, a fresh discriminator separates real from generated
// prefixes whose lengths are drawn uniformly from the bucket.
std::vector<BucketError> length_bucket_errors(
    const Corpus& real_train, const Corpus& real_test, const GenModel& gen,
    const SamplerConfig& sampling, const TextCNNConfig& config, int buckets,
    uint64_t seed);

inline const std::vector<std::string>& all_metric_names() {
  static const std::vector<std::string> kNames = {"bleu", "selfbleu", "lm",
                                                  "rlm",  "fed",      "err"};
  return kNames;
}

struct SweepConfig {
  std::vector<double> temperatures = {0.9, 1.0, 1.1, 1.2};
  // Targets for the filtered streams; empty means baseline rows only.
  std::vector<double> c_grid;
  std::vector<std::string> metrics = all_metric_names();
  size_t samples_per_point = 1000;
  int max_len = kDefaultMaxLen;
  BleuConfig bleu;
  EstimateConfig estimate;
  size_t max_attempts_per_sample = 10000;
  uint64_t seed = 0;

  void validate() const;
  bool wants(const std::string& metric) const;
};

// Everything a sweep reads. Pointers may be null when the metrics that need
// them are not requested.
struct SweepInputs {
  GenModelPtr gen;
  DiscriminatorPtr disc;      // needed when c_grid is non-empty
  const Corpus* real_train = nullptr;  // "err"
  const Corpus* real_test = nullptr;   // "bleu", "rlm", "fed", "err"
  const GenModel* oracle_lm = nullptr;           // "lm"
  const EmbeddingModel* embedding = nullptr;     // "fed"
  GenConfig reverse_lm;                          // "rlm"
  TextCNNConfig classifier;                      // "err"
};

struct SweepRow {
  double temperature = 1.0;
  double c = 1.0;
  std::string stream;  // baseline | accepted | rejected
  double u_c = 0.0;
  double acceptance = 1.0;
  // Unrequested or undefined metrics stay empty.
  std::optional<double> bleu, self_bleu, lm_score, rev_lm_score, fed,
      error_rate;
};

struct SweepReport {
  std::vector<SweepRow> rows;

  // temperature,c,stream,bleu5,self_bleu5,lm_score,rev_lm_score,fed,error_rate
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

inline constexpr const char* kSweepCsvHeader =
    "temperature,c,stream,bleu5,self_bleu5,lm_score,rev_lm_score,fed,"
    "error_rate";

struct StreamMetrics {
  std::optional<double> bleu, self_bleu, lm_score, rev_lm_score, fed,
      error_rate;
};

// Metrics of one sample set. `source` regenerates the stream for "err".
StreamMetrics evaluate_stream(const Corpus& samples, const SampleSource& source,
                              const SweepInputs& in, const SweepConfig& cfg,
                              uint64_t seed);

SweepReport temperature_sweep(const SweepInputs& in, const SweepConfig& cfg);

}  // namespace filtergen

#endif  // FILTERGEN_SWEEP_H_
