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

#include "filtergen/sweep.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace filtergen {

using nlohmann::json;

ClassifierResult classification_error(const Corpus& real_train,
                                      const Corpus& real_test,
                                      const SampleSource& generated,
                                      const TextCNNConfig& config,
                                      uint64_t seed) {
  if (real_test.empty()) throw InputError("classification_error: no test data");
  ClassifierResult out;
  auto [disc, report] = train_discriminator(
      real_train, generated, config, derive_seed(seed, "classifier-train"));
  Rng rng(derive_seed(seed, "classifier-test"));
  Corpus gen_test{real_test.vocab, {}, Split::kTest};
  gen_test.sequences.reserve(real_test.size());
  for (size_t i = 0; i < real_test.size(); ++i) {
    gen_test.sequences.push_back(generated(rng));
  }
  out.error_rate = error_rate(disc, real_test, gen_test);
  out.report = std::move(report);
  return out;
}

std::vector<std::pair<int, int>> length_buckets(int max_len, int buckets) {
  if (max_len < 1 || buckets < 1 || buckets > max_len) {
    throw InputError("length_buckets: need 1 <= buckets <= max_len");
  }
  std::vector<std::pair<int, int>> out;
  for (int b = 0; b < buckets; ++b) {
    out.emplace_back(1 + b * max_len / buckets, (b + 1) * max_len / buckets);
  }
  return out;
}

namespace {

Sequence truncate(const Sequence& s, int lo, int hi, Rng& rng) {
  const int top = std::min(hi, s.size());
  const int bottom = std::min(lo, top);
  const int len = bottom + static_cast<int>(rng.below(top - bottom + 1));
  return Sequence(std::vector<TokenId>(s.ids().begin(), s.ids().begin() + len));
}

Corpus truncate_all(const Corpus& c, int lo, int hi, uint64_t seed) {
  Rng rng(seed);
  Corpus out{c.vocab, {}, c.split};
  out.sequences.reserve(c.size());
  for (const auto& s : c.sequences) out.sequences.push_back(truncate(s, lo, hi, rng));
  return out;
}

}  // namespace

std::vector<BucketError> length_bucket_errors(
    const Corpus& real_train, const Corpus& real_test, const GenModel& gen,
    const SamplerConfig& sampling, const TextCNNConfig& config, int buckets,
    uint64_t seed) {
  std::vector<BucketError> out;
  const auto ranges = length_buckets(gen.length(), buckets);
  for (size_t b = 0; b < ranges.size(); ++b) {
    const auto [lo, hi] = ranges[b];
    const Corpus train =
        truncate_all(real_train, lo, hi, derive_seed(seed, "bucket-real", b));
    const Corpus test =
        truncate_all(real_test, lo, hi, derive_seed(seed, "bucket-test", b));
    SampleSource source = [&gen, sampling, lo = lo, hi = hi](Rng& rng) {
      return truncate(gen.sample(sampling, rng), lo, hi, rng);
    };
    const auto result = classification_error(
        train, test, source, config, derive_seed(seed, "bucket-classifier", b));
    out.push_back({lo, hi, result.error_rate});
  }
  return out;
}

void SweepConfig::validate() const {
  if (temperatures.empty()) throw InputError("sweep: no temperatures");
  for (double t : temperatures) {
    if (!(t > 0.0)) throw InputError("temperature must be > 0");
  }
  for (double c : c_grid) {
    if (!(c > 0.0 && c <= 1.0)) throw InputError("c must be in (0, 1]");
  }
  for (const auto& m : metrics) {
    const auto& names = all_metric_names();
    if (std::find(names.begin(), names.end(), m) == names.end()) {
      throw InputError("unknown metric '" + m + "'");
    }
  }
  if (samples_per_point < 2) throw InputError("sweep: need >= 2 samples");
  bleu.validate();
  estimate.validate();
}

bool SweepConfig::wants(const std::string& metric) const {
  return std::find(metrics.begin(), metrics.end(), metric) != metrics.end();
}

namespace {

template <typename T>
const T& need(const T* p, const char* what) {
  if (!p) throw InputError(std::string("sweep: metric needs ") + what);
  return *p;
}

std::string format_value(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", *v);
  return buf;
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

StreamMetrics evaluate_stream(const Corpus& samples, const SampleSource& source,
                              const SweepInputs& in, const SweepConfig& cfg,
                              uint64_t seed) {
  StreamMetrics m;
  if (samples.empty()) return m;
  if (cfg.wants("bleu")) {
    m.bleu = bleu(samples, need(in.real_test, "real test data"), cfg.bleu);
  }
  if (cfg.wants("selfbleu") && samples.size() >= 2) {
    m.self_bleu = self_bleu(samples, cfg.bleu);
  }
  if (cfg.wants("lm")) {
    m.lm_score = lm_score(need(in.oracle_lm, "an oracle LM"), samples);
  }
  if (cfg.wants("rlm") && samples.size() >= kMinReverseSamples) {
    m.rev_lm_score =
        reverse_lm_score(samples, need(in.real_test, "real test data"),
                         in.reverse_lm, derive_seed(seed, "rlm"));
  }
  if (cfg.wants("fed")) {
    const auto& em = need(in.embedding, "an embedding model");
    m.fed = fed(embed(need(in.real_test, "real test data"), em),
                embed(samples, em));
  }
  if (cfg.wants("err")) {
    m.error_rate =
        classification_error(need(in.real_train, "real train data"),
                             need(in.real_test, "real test data"), source,
                             in.classifier, derive_seed(seed, "err"))
            .error_rate;
  }
  return m;
}

namespace {

SweepRow make_row(double t, double c, const char* stream, double u_c,
                  double acceptance, const StreamMetrics& m) {
  SweepRow r;
  r.temperature = t;
  r.c = c;
  r.stream = stream;
  r.u_c = u_c;
  r.acceptance = acceptance;
  r.bleu = m.bleu;
  r.self_bleu = m.self_bleu;
  r.lm_score = m.lm_score;
  r.rev_lm_score = m.rev_lm_score;
  r.fed = m.fed;
  r.error_rate = m.error_rate;
  return r;
}

}  // namespace

SweepReport temperature_sweep(const SweepInputs& in, const SweepConfig& cfg) {
  cfg.validate();
  if (!in.gen) throw InputError("sweep: no generator");
  if (!cfg.c_grid.empty() && !in.disc) {
    throw InputError("sweep: filtered streams need a discriminator");
  }
  const GenModel& gen = *in.gen;
  const size_t n = cfg.samples_per_point;
  SweepReport report;

  for (size_t ti = 0; ti < cfg.temperatures.size(); ++ti) {
    const double t = cfg.temperatures[ti];
    SamplerConfig sampling{t, cfg.max_len,
                           derive_seed(cfg.seed, "sweep-sample", ti)};
    const uint64_t metric_seed = derive_seed(cfg.seed, "sweep-metrics", ti);

    Corpus baseline{gen.vocab_ptr(), {}, Split::kUnspecified};
    {
      Rng rng(sampling.seed);
      for (size_t i = 0; i < n; ++i) baseline.sequences.push_back(gen.sample(sampling, rng));
    }
    const SampleSource base_source = [&gen, sampling](Rng& rng) {
      return gen.sample(sampling, rng);
    };
    report.rows.push_back(make_row(
        t, 1.0, "baseline", 0.0, 1.0,
        evaluate_stream(baseline, base_source, in, cfg, metric_seed)));

    for (size_t ci = 0; ci < cfg.c_grid.size(); ++ci) {
      const double c = cfg.c_grid[ci];
      SamplerConfig est_sampling = sampling;
      est_sampling.seed = derive_seed(cfg.seed, "sweep-estimate", ti * 1000 + ci);
      const UcEstimate est = estimate_uc(gen, *in.disc, c, cfg.estimate, est_sampling);
      const FilteredGenerator fg(in.gen, in.disc, FilterParams{c, est.u_c},
                                 cfg.max_attempts_per_sample);

      // The generation stream matches the baseline's, so c = 1 reproduces it.
      Rng gen_rng(sampling.seed);
      Rng accept_rng(derive_seed(sampling.seed, "filter-accept"));
      Corpus accepted{gen.vocab_ptr(), {}, Split::kUnspecified};
      Corpus rejected = accepted;
      FilterStats stats;
      stats.target_c = c;
      const size_t budget = 2 * n * cfg.max_attempts_per_sample;
      const bool want_rejected = c < 1.0;
      while (accepted.size() < n || (want_rejected && rejected.size() < n)) {
        if (stats.attempts >= budget) {
          throw BudgetError("sweep: attempt budget exhausted at T=" +
                                std::to_string(t) + ", c=" + std::to_string(c),
                            {accepted, rejected, stats});
        }
        auto a = fg.attempt(sampling, gen_rng, accept_rng);
        ++stats.attempts;
        if (a.accepted) {
          ++stats.acceptances;
          if (accepted.size() < n) accepted.sequences.push_back(std::move(a.seq));
        } else if (rejected.size() < n) {
          rejected.sequences.push_back(std::move(a.seq));
        }
      }

      const uint64_t source_seed = derive_seed(cfg.seed, "sweep-source", ti * 1000 + ci);
      report.rows.push_back(make_row(
          t, c, "accepted", est.u_c, stats.acceptance_ratio(),
          evaluate_stream(accepted, accepted_source(fg, sampling, source_seed),
                          in, cfg, metric_seed)));
      report.rows.push_back(make_row(
          t, c, "rejected", est.u_c, stats.acceptance_ratio(),
          evaluate_stream(rejected, rejected_source(fg, sampling, source_seed),
                          in, cfg, metric_seed)));
    }
  }
  return report;
}

std::string SweepReport::to_csv() const {
  std::ostringstream out;
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << format_value(r.temperature) << ',' << format_value(r.c) << ','
        << r.stream << ',' << format_value(r.bleu) << ','
        << format_value(r.self_bleu) << ',' << format_value(r.lm_score) << ','
        << format_value(r.rev_lm_score) << ',' << format_value(r.fed) << ','
        << format_value(r.error_rate) << '\n';
  }
  return out.str();
}

json SweepReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"temperature", r.temperature},
                         {"c", r.c},
                         {"stream", r.stream},
                         {"u_c", r.u_c},
                         {"acceptance", r.acceptance},
                         {"bleu5", optional_json(r.bleu)},
                         {"self_bleu5", optional_json(r.self_bleu)},
                         {"lm_score", optional_json(r.lm_score)},
                         {"rev_lm_score", optional_json(r.rev_lm_score)},
                         {"fed", optional_json(r.fed)},
                         {"error_rate", optional_json(r.error_rate)}});
  }
  return {{"rows", rows_json}};
}

}  // namespace filtergen
