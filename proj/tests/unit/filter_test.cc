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

#include "filtergen/filter.h"
#include "filtergen/oracle.h"
#include "filtergen/scenarios.h"

using namespace filtergen;

namespace {

struct Fixture {
  Scenario s;
  std::shared_ptr<TableDiscriminator> dstar;
};

Fixture optimal(const std::string& id) {
  Scenario s = build_scenario(load_scenario(id), 7);
  auto d = std::make_shared<TableDiscriminator>(s.p_theta, s.optimal_d());
  return {std::move(s), std::move(d)};
}

SamplerConfig fixed(const Scenario& s, uint64_t seed) {
  return SamplerConfig{1.0, s.spec.source.length, seed};
}

}  // namespace

TEST_CASE("filter_prob examples") {
  CHECK(filter_prob(0.2, 0.5, 0.6) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(filter_prob(0.7, 0.5, 0.6) == 1.0);
  CHECK(filter_prob(0.9, 0.8, 0.95) == 1.0);
}

TEST_CASE("filter_prob rejects scores outside (0, 1) and bad params") {
  CHECK_THROWS_AS(filter_prob(0.0, 0.5, 0.5), InputError);
  CHECK_THROWS_AS(filter_prob(1.0, 0.5, 0.5), InputError);
  CHECK_THROWS_AS(filter_prob(0.5, 0.0, 0.5), InputError);
  CHECK_THROWS_AS(filter_prob(0.5, 1.5, 0.5), InputError);
  CHECK_THROWS_AS(filter_prob(0.5, 0.5, 1.5), InputError);
  CHECK_THROWS_AS(FilterParams({0.5, -0.1}).validate(), InputError);
}

TEST_CASE("property: filter_prob is a monotone probability") {
  Rng rng(12);
  for (int trial = 0; trial < 2000; ++trial) {
    const double c = rng.uniform(1e-3, 1.0);
    const double u = rng.uniform();
    const double d1 = rng.uniform(1e-9, 1.0 - 1e-9);
    const double d2 = rng.uniform(1e-9, 1.0 - 1e-9);
    const double s1 = filter_prob(d1, c, u), s2 = filter_prob(d2, c, u);
    CHECK(s1 >= 0.0);
    CHECK(s1 <= 1.0);
    if (d1 <= d2) CHECK(s1 <= s2);
    // Continuous away from the boundary.
    if (d1 + 1e-7 < u) CHECK(std::abs(filter_prob(d1 + 1e-9, c, u) - s1) < 1e-5);
  }
}

TEST_CASE("odds ratio is capped near one") {
  CHECK(filter_prob(1.0 - 1e-15, 1e-12, 1.0) <= 1.0);
  CHECK(filter_prob(1.0 - 1e-15, 1e-12, 1.0) == doctest::Approx(1e-12 * kMaxOddsRatio));
  FilterParams p{0.5, 0.5};
  CHECK(acceptance_probability(0.0, p) == 0.0);
  CHECK(acceptance_probability(1.0, p) == 1.0);
  CHECK(acceptance_probability(0.0, FilterParams{0.5, 0.0}) == 1.0);
}

TEST_CASE("accept edge cases") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(accept(rng.uniform(1e-6, 1 - 1e-6), FilterParams{0.3, 0.0}, rng));
    CHECK_FALSE(accept(0.0, FilterParams{0.3, 0.5}, rng));
  }
}

TEST_CASE("Monte Carlo acceptance matches filter_prob") {
  Rng rng(2);
  const FilterParams p{0.5, 0.8};
  for (double d : {0.1, 0.3, 0.5, 0.75, 0.85}) {
    size_t hits = 0;
    const size_t n = 100000;
    for (size_t i = 0; i < n; ++i) hits += accept(d, p, rng);
    CHECK(std::abs(hits / double(n) - filter_prob(d, p.c, p.u_c)) <= 0.01);
  }
}

TEST_CASE("estimate_uc at c = 1 is the identity") {
  const Fixture f = optimal("s2");
  const UcEstimate e = estimate_uc(*f.s.generator, *f.dstar, 1.0, EstimateConfig{}, fixed(f.s, 1));
  CHECK(e.u_c == 0.0);
  CHECK(e.final_acceptance == 1.0);
  CHECK_THROWS_AS(estimate_uc(*f.s.generator, *f.dstar, 0.0, EstimateConfig{}, fixed(f.s, 1)),
                  InputError);
  CHECK_THROWS_AS(estimate_uc(*f.s.generator, *f.dstar, 1.2, EstimateConfig{}, fixed(f.s, 1)),
                  InputError);
}

TEST_CASE("estimate_uc on the two-sequence scenario reaches c = 0.4") {
  const Fixture f = optimal("s1");
  const UcEstimate e = estimate_uc(*f.s.generator, *f.dstar, 0.4, EstimateConfig{}, fixed(f.s, 2));
  const double acc = exact_acceptance(f.s.p_theta, f.dstar->values(), 0.4, e.u_c);
  CHECK(std::abs(acc - 0.4) <= 0.05);
  CHECK(e.trace_uc.size() == 100);
  CHECK(e.trace_acceptance.size() == 100);
  // The result is the mean of the last ten boundaries.
  double tail = 0.0;
  for (size_t i = 90; i < 100; ++i) tail += e.trace_uc[i];
  CHECK(e.u_c == doctest::Approx(tail / 10).epsilon(1e-12));
}

TEST_CASE("estimate_uc follows the up/down rule and stays clamped") {
  const Fixture f = optimal("s2");
  EstimateConfig cfg;
  cfg.rounds = 60;
  const UcEstimate e = estimate_uc(*f.s.generator, *f.dstar, 0.05, cfg, fixed(f.s, 3));
  for (size_t i = 0; i + 1 < e.trace_uc.size(); ++i) {
    const double expected = std::clamp(
        e.trace_uc[i] + (e.trace_acceptance[i] < 0.05 ? -cfg.step : cfg.step), 0.0, 1.0);
    CHECK(e.trace_uc[i + 1] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(e.trace_uc[i + 1] <= 1.0);
  }
}

TEST_CASE("estimated boundaries decrease with c") {
  const Fixture f = optimal("s2");
  const double u2 = estimate_uc(*f.s.generator, *f.dstar, 0.2, EstimateConfig{}, fixed(f.s, 4)).u_c;
  const double u8 = estimate_uc(*f.s.generator, *f.dstar, 0.8, EstimateConfig{}, fixed(f.s, 4)).u_c;
  CHECK(u2 >= u8);
}

TEST_CASE("identity filter reproduces the base stream") {
  const Fixture f = optimal("s2");
  for (uint64_t seed : {1u, 2u, 3u}) {
    const FilteredGenerator fg(f.s.generator, f.dstar, FilterParams{1.0, 0.0});
    const FilteredSamples out = sample_filtered(fg, 200, fixed(f.s, seed));
    Rng rng(seed);
    for (const auto& x : out.accepted.sequences) {
      CHECK(x == f.s.generator->sample(fixed(f.s, seed), rng));
    }
    CHECK(out.rejected.empty());
    CHECK(out.stats.acceptance_ratio() == 1.0);
  }
}

TEST_CASE("filtered samples match the exact filtered distribution") {
  for (const std::string id : {"s1", "s2", "s3", "s4"}) {
    const Fixture f = optimal(id);
    const double c = 0.5;
    const ExactUc ex = exact_uc(f.s.p_theta, f.dstar->values(), c);
    const FilteredGenerator fg(f.s.generator, f.dstar, FilterParams{c, ex.u_c});
    const ExactFiltered exact = exact_filtered_distribution(f.s.p_theta, f.dstar->values(), c, ex.u_c);
    const size_t n = samples_for_tv_floor(exact.dist, 0.005, 200000);
    const FilteredSamples out = sample_filtered(fg, n, fixed(f.s, 5), 1, false);
    CHECK(tv_distance(empirical_distribution(exact.dist, out.accepted), exact.dist) <= 0.01);
  }
}

TEST_CASE("filter statistics are consistent") {
  const Fixture f = optimal("s3");
  const FilteredGenerator fg(f.s.generator, f.dstar, FilterParams{0.5, 0.6});
  const FilteredSamples out = sample_filtered(fg, 2000, fixed(f.s, 6));
  const FilterStats& st = out.stats;
  CHECK(st.acceptances == 2000);
  CHECK(st.acceptances == out.accepted.size());
  CHECK(st.attempts == out.accepted.size() + out.rejected.size());
  CHECK(st.acceptance_ratio() >= 0.0);
  CHECK(st.acceptance_ratio() <= 1.0);
  CHECK(st.mean_d_accepted() > st.mean_d_rejected());
  CHECK(st.abs_error() == doctest::Approx(std::abs(st.acceptance_ratio() - 0.5)));
  for (const auto& x : out.accepted.sequences) CHECK(f.s.p_theta.index_of(x) < f.s.p_theta.size());
}

TEST_CASE("stats merge associatively") {
  FilterStats a, b, c;
  a.attempts = 10, a.acceptances = 4, a.sum_d_accepted = 2.0, a.sum_d_rejected = 1.0;
  b.attempts = 5, b.acceptances = 5, b.sum_d_accepted = 4.0;
  c.attempts = 7, c.acceptances = 1, c.sum_d_accepted = 0.5, c.sum_d_rejected = 2.0;
  FilterStats ab = a;
  ab.merge(b);
  ab.merge(c);
  FilterStats bc = b;
  bc.merge(c);
  FilterStats a_bc = a;
  a_bc.merge(bc);
  CHECK(ab.attempts == a_bc.attempts);
  CHECK(ab.acceptances == a_bc.acceptances);
  CHECK(ab.mean_d_accepted() == doctest::Approx(a_bc.mean_d_accepted()));
}

TEST_CASE("multi-worker sampling is deterministic per worker count") {
  const Fixture f = optimal("s2");
  const FilteredGenerator fg(f.s.generator, f.dstar, FilterParams{0.5, 0.5});
  const auto a = sample_filtered(fg, 500, fixed(f.s, 9), 3);
  const auto b = sample_filtered(fg, 500, fixed(f.s, 9), 3);
  CHECK(a.accepted.size() == 500);
  CHECK(a.accepted.sequences == b.accepted.sequences);
}

TEST_CASE("exhausted budgets raise with partial results") {
  const Fixture f = optimal("s2");
  // D* never reaches 1 here, so a boundary of 1 with tiny c rejects nearly all.
  const FilteredGenerator fg(f.s.generator, f.dstar, FilterParams{1e-9, 1.0}, 2);
  try {
    sample_filtered(fg, 50, fixed(f.s, 1));
    FAIL("expected BudgetError");
  } catch (const BudgetError& e) {
    CHECK(e.partial().stats.attempts == 100);
    CHECK(e.partial().accepted.size() < 50);
  }
}

TEST_CASE("accepted and rejected sources emit matching streams") {
  const Fixture f = optimal("s2");
  const FilteredGenerator fg(f.s.generator, f.dstar, FilterParams{0.5, 0.5});
  const SampleSource acc = accepted_source(fg, fixed(f.s, 0), 77);
  const SampleSource rej = rejected_source(fg, fixed(f.s, 0), 77);
  Rng r1(1), r2(1);
  for (int i = 0; i < 100; ++i) {
    const Sequence a = acc(r1);
    const Sequence r = rej(r2);
    CHECK(f.dstar->predict(a) > 0.0);
    CHECK(f.dstar->predict(r) < 0.5);
  }
}
