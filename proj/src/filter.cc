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

#include "filtergen/filter.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace filtergen {

using nlohmann::json;

void FilterParams::validate() const {
  if (!(c > 0.0 && c <= 1.0)) throw InputError("c must be in (0, 1]");
  if (!(u_c >= 0.0 && u_c <= 1.0)) throw InputError("u_c must be in [0, 1]");
}

double acceptance_probability(double d, const FilterParams& params) {
  if (d >= params.u_c) return 1.0;
  if (d <= 0.0) return 0.0;
  // d < u_c <= 1 here, so 1 - d > 0.
  const double odds = std::min(d / (1.0 - d), kMaxOddsRatio);
  return std::min(1.0, params.c * odds);
}

double filter_prob(double d, double c, double u_c) {
  if (!(d > 0.0 && d < 1.0)) {
    throw InputError("filter_prob: d must be in (0, 1)");
  }
  FilterParams p{c, u_c};
  p.validate();
  return acceptance_probability(d, p);
}

bool accept(double d, const FilterParams& params, Rng& rng) {
  const double z = rng.uniform();
  return d >= params.u_c || z <= acceptance_probability(d, params);
}

bool accept(const Sequence& seq, const Discriminator& disc,
            const FilterParams& params, Rng& rng) {
  return accept(disc.predict(seq), params, rng);
}

void EstimateConfig::validate() const {
  if (samples_per_round < 1 || rounds < 1 || average_last < 1) {
    throw InputError("estimate config: counts must be >= 1");
  }
  if (!(step > 0.0)) throw InputError("estimate config: step must be > 0");
  if (!(init >= 0.0 && init <= 1.0)) {
    throw InputError("estimate config: init must be in [0, 1]");
  }
}

json EstimateConfig::to_json() const {
  return {{"samples_per_round", samples_per_round},
          {"rounds", rounds},
          {"step", step},
          {"init", init},
          {"average_last", average_last}};
}

EstimateConfig EstimateConfig::from_json(const json& j) {
  EstimateConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "samples_per_round") c.samples_per_round = v.get<int>();
    else if (key == "rounds") c.rounds = v.get<int>();
    else if (key == "step") c.step = v.get<double>();
    else if (key == "init") c.init = v.get<double>();
    else if (key == "average_last") c.average_last = v.get<int>();
    else throw InputError("estimate config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

json UcEstimate::to_json() const {
  json trace = json::array();
  for (size_t i = 0; i < trace_uc.size(); ++i) {
    trace.push_back({{"u_c", trace_uc[i]}, {"acceptance", trace_acceptance[i]}});
  }
  return {{"c", c},
          {"u_c", u_c},
          {"final_acceptance", final_acceptance},
          {"trace", trace}};
}

namespace {

double measure_acceptance(const GenModel& gen, const Discriminator& disc,
                          const FilterParams& params, int samples,
                          const SamplerConfig& sampling, Rng& gen_rng,
                          Rng& accept_rng) {
  size_t accepted = 0;
  for (int k = 0; k < samples; ++k) {
    const Sequence x = gen.sample(sampling, gen_rng);
    if (accept(x, disc, params, accept_rng)) ++accepted;
  }
  return static_cast<double>(accepted) / samples;
}

}  // namespace

UcEstimate estimate_uc(const GenModel& gen, const Discriminator& disc,
                       double c, const EstimateConfig& config,
                       const SamplerConfig& sampling) {
  if (!(c > 0.0 && c <= 1.0)) throw InputError("estimate_uc: c not in (0, 1]");
  config.validate();
  sampling.validate();
  Rng gen_rng(derive_seed(sampling.seed, "estimate-uc-generate"));
  Rng accept_rng(derive_seed(sampling.seed, "estimate-uc-accept"));

  UcEstimate est;
  est.c = c;
  if (c >= 1.0) {
    est.u_c = 0.0;
  } else {
    double u = config.init;
    for (int round = 0; round < config.rounds; ++round) {
      const double observed =
          measure_acceptance(gen, disc, FilterParams{c, u},
                             config.samples_per_round, sampling, gen_rng,
                             accept_rng);
      est.trace_uc.push_back(u);
      est.trace_acceptance.push_back(observed);
      u = observed < c ? u - config.step : u + config.step;
      u = std::clamp(u, 0.0, 1.0);
    }
    const size_t tail =
        std::min<size_t>(config.average_last, est.trace_uc.size());
    const double sum = std::accumulate(est.trace_uc.end() - tail,
                                       est.trace_uc.end(), 0.0);
    est.u_c = std::clamp(sum / static_cast<double>(tail), 0.0, 1.0);
  }
  est.final_acceptance = measure_acceptance(
      gen, disc, FilterParams{c, est.u_c}, config.samples_per_round, sampling,
      gen_rng, accept_rng);
  return est;
}

double FilterStats::acceptance_ratio() const {
  return attempts ? static_cast<double>(acceptances) / attempts : 0.0;
}

double FilterStats::mean_d_accepted() const {
  return acceptances ? sum_d_accepted / acceptances : 0.0;
}

double FilterStats::mean_d_rejected() const {
  const size_t rejected = attempts - acceptances;
  return rejected ? sum_d_rejected / rejected : 0.0;
}

double FilterStats::abs_error() const {
  return std::abs(acceptance_ratio() - target_c);
}

void FilterStats::merge(const FilterStats& other) {
  attempts += other.attempts;
  acceptances += other.acceptances;
  sum_d_accepted += other.sum_d_accepted;
  sum_d_rejected += other.sum_d_rejected;
}

json FilterStats::to_json() const {
  return {{"c", target_c},
          {"attempts", attempts},
          {"acceptances", acceptances},
          {"acceptance_ratio", acceptance_ratio()},
          {"abs_error", abs_error()},
          {"mean_d_accepted", mean_d_accepted()},
          {"mean_d_rejected", mean_d_rejected()}};
}

FilteredGenerator::FilteredGenerator(GenModelPtr base, DiscriminatorPtr disc,
                                     FilterParams params,
                                     size_t max_attempts_per_sample)
    : base_(std::move(base)),
      disc_(std::move(disc)),
      params_(params),
      max_attempts_(max_attempts_per_sample) {
  if (!base_ || !disc_) throw InputError("FilteredGenerator: null component");
  params_.validate();
  if (max_attempts_ == 0) throw InputError("FilteredGenerator: zero budget");
}

FilteredGenerator::Attempt FilteredGenerator::attempt(
    const SamplerConfig& sampling, Rng& gen_rng, Rng& accept_rng) const {
  Sequence seq = base_->sample(sampling, gen_rng);
  const double d = disc_->predict(seq);
  const bool ok = accept(d, params_, accept_rng);
  return {std::move(seq), d, ok};
}

namespace {

struct Chunk {
  FilteredSamples out;
  bool exhausted = false;
};

Chunk run_chunk(const FilteredGenerator& fg, size_t n,
                const SamplerConfig& sampling, uint64_t gen_seed,
                uint64_t accept_seed, bool keep_rejected) {
  Chunk chunk;
  auto& out = chunk.out;
  out.accepted = Corpus{fg.base().vocab_ptr(), {}, Split::kUnspecified};
  out.rejected = out.accepted;
  out.stats.target_c = fg.params().c;
  Rng gen_rng(gen_seed);
  Rng accept_rng(accept_seed);
  const size_t budget = fg.max_attempts_per_sample() * n;
  while (out.accepted.size() < n) {
    if (out.stats.attempts >= budget) {
      chunk.exhausted = true;
      break;
    }
    auto a = fg.attempt(sampling, gen_rng, accept_rng);
    ++out.stats.attempts;
    if (a.accepted) {
      ++out.stats.acceptances;
      out.stats.sum_d_accepted += a.d;
      out.accepted.sequences.push_back(std::move(a.seq));
    } else {
      out.stats.sum_d_rejected += a.d;
      if (keep_rejected) out.rejected.sequences.push_back(std::move(a.seq));
    }
  }
  return chunk;
}

}  // namespace

FilteredSamples sample_filtered(const FilteredGenerator& fg, size_t n,
                                const SamplerConfig& sampling, int workers,
                                bool keep_rejected) {
  sampling.validate();
  if (workers < 1) throw InputError("sample_filtered: workers must be >= 1");
  const uint64_t accept_seed = derive_seed(sampling.seed, "filter-accept");
  std::vector<Chunk> chunks;
  if (workers == 1 || n < static_cast<size_t>(workers)) {
    chunks.push_back(run_chunk(fg, n, sampling, sampling.seed, accept_seed,
                               keep_rejected));
  } else {
    chunks.resize(workers);
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      const size_t share = n / workers + (static_cast<size_t>(w) < n % workers);
      threads.emplace_back([&, w, share] {
        chunks[w] = run_chunk(
            fg, share, sampling,
            derive_seed(sampling.seed, "filter-worker-generate", w),
            derive_seed(sampling.seed, "filter-worker-accept", w),
            keep_rejected);
      });
    }
    for (auto& t : threads) t.join();
  }

  FilteredSamples result;
  result.accepted = Corpus{fg.base().vocab_ptr(), {}, Split::kUnspecified};
  result.rejected = result.accepted;
  result.stats.target_c = fg.params().c;
  bool exhausted = false;
  for (auto& ch : chunks) {
    auto& acc = result.accepted.sequences;
    auto& rej = result.rejected.sequences;
    acc.insert(acc.end(), ch.out.accepted.sequences.begin(),
               ch.out.accepted.sequences.end());
    rej.insert(rej.end(), ch.out.rejected.sequences.begin(),
               ch.out.rejected.sequences.end());
    result.stats.merge(ch.out.stats);
    exhausted = exhausted || ch.exhausted;
  }
  if (exhausted) {
    throw BudgetError("sample_filtered: attempt budget exhausted after " +
                          std::to_string(result.stats.attempts) +
                          " attempts with " +
                          std::to_string(result.stats.acceptances) +
                          " acceptances",
                      std::move(result));
  }
  return result;
}

namespace {

SampleSource filtered_source(const FilteredGenerator& fg,
                             const SamplerConfig& sampling, uint64_t seed,
                             bool want_accepted) {
  auto accept_rng = std::make_shared<Rng>(seed);
  return [&fg, sampling, accept_rng, want_accepted](Rng& gen_rng) {
    for (size_t i = 0; i < fg.max_attempts_per_sample(); ++i) {
      auto a = fg.attempt(sampling, gen_rng, *accept_rng);
      if (a.accepted == want_accepted) return std::move(a.seq);
    }
    throw BudgetError("filtered source: attempt budget exhausted", {});
  };
}

}  // namespace

SampleSource accepted_source(const FilteredGenerator& fg,
                             const SamplerConfig& sampling, uint64_t seed) {
  return filtered_source(fg, sampling, seed, true);
}

SampleSource rejected_source(const FilteredGenerator& fg,
                             const SamplerConfig& sampling, uint64_t seed) {
  return filtered_source(fg, sampling, seed, false);
}

}  // namespace filtergen
