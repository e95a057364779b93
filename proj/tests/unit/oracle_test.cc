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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "filtergen/oracle.h"
#include "filtergen/scenarios.h"

using namespace filtergen;

namespace {

ExactDistribution two_point(VocabPtr vocab, double p) {
  ExactDistribution d;
  d.vocab = vocab;
  d.length = 1;
  d.domain = {Sequence{4}, Sequence{5}};
  d.probs = {p, 1.0 - p};
  return d;
}

VocabPtr ab() {
  return std::make_shared<const Vocab>(std::vector<std::string>{"a", "b"});
}

// Random distribution over a small enumerable domain.
ExactDistribution random_dist(VocabPtr vocab, int length, Rng& rng, double zero_prob) {
  ExactDistribution d;
  d.vocab = vocab;
  d.length = length;
  d.domain = enumerate_domain(*vocab, length);
  double total = 0.0;
  for (size_t i = 0; i < d.domain.size(); ++i) {
    const double w = rng.uniform() < zero_prob ? 0.0 : rng.uniform(0.01, 1.0);
    d.probs.push_back(w);
    total += w;
  }
  if (total == 0.0) {
    d.probs[0] = 1.0;
    total = 1.0;
  }
  for (double& p : d.probs) p /= total;
  return d;
}

const std::vector<std::string> kScenarios = {"s1", "s2", "s3", "s4"};

}  // namespace

TEST_CASE("uniform source enumerates to nine entries of 1/9") {
  MarkovSource s;
  s.initial.assign(3, 1.0 / 3);
  s.transition.assign(3, std::vector<double>(3, 1.0 / 3));
  s.length = 2;
  const ExactDistribution d = enumerate_distribution(s);
  REQUIRE(d.size() == 9);
  for (double p : d.probs) CHECK(p == doctest::Approx(1.0 / 9).epsilon(1e-12));
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("domains are lexicographic and bounded") {
  const auto v = std::make_shared<const Vocab>(std::vector<std::string>{"a", "b", "c"});
  const auto dom = enumerate_domain(*v, 3);
  CHECK(dom.size() == 27);
  for (size_t i = 1; i < dom.size(); ++i) CHECK(dom[i - 1] < dom[i]);
  const auto big = std::make_shared<const Vocab>(std::vector<std::string>{
      "a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k"});
  CHECK_THROWS_AS(enumerate_domain(*big, 6), InputError);
}

TEST_CASE("bundled scenarios are normalized with non-negative KL") {
  for (const auto& id : kScenarios) {
    const Scenario s = build_scenario(load_scenario(id), 7);
    CHECK(std::abs(s.p_r.total() - 1.0) <= 1e-9);
    CHECK(std::abs(s.p_theta.total() - 1.0) <= 1e-6);
    CHECK(kl_divergence(s.p_r, s.p_theta) >= 0.0);
    CHECK(s.p_r.size() <= 7776);
  }
}

TEST_CASE("optimal discriminator examples") {
  const auto v = ab();
  ExactDistribution r = two_point(v, 0.3);
  r.probs = {0.3, 0.7};
  ExactDistribution g = two_point(v, 0.1);
  g.probs = {0.1, 0.9};
  const auto d = optimal_discriminator(r, g);
  CHECK(d[0] == doctest::Approx(0.75).epsilon(1e-12));
  const auto same = optimal_discriminator(r, r);
  CHECK(same[0] == 0.5);
  CHECK(same[1] == 0.5);
  g.probs = {1.0, 0.0};
  r.probs = {0.0, 1.0};
  const auto edge = optimal_discriminator(r, g);
  CHECK(edge[0] == 0.0);
  CHECK(edge[1] == 1.0);
  r.probs = {1.0, 0.0};
  CHECK(optimal_discriminator(r, g)[1] == 0.5);
  ExactDistribution other = two_point(v, 0.5);
  other.length = 2;
  other.domain = {Sequence{4, 4}, Sequence{4, 5}};
  CHECK_THROWS_AS(optimal_discriminator(r, other), InputError);
}

TEST_CASE("identity filter leaves p_theta unchanged") {
  const Scenario s = build_scenario(load_scenario("s2"), 7);
  const auto f = exact_filtered_distribution(s.p_theta, s.optimal_d(), 1.0, 0.0);
  CHECK(f.c_exact == doctest::Approx(1.0).epsilon(1e-12));
  for (size_t i = 0; i < f.dist.size(); ++i) {
    CHECK(f.dist.probs[i] == doctest::Approx(s.p_theta.probs[i]).epsilon(1e-12));
  }
}

TEST_CASE("two-sequence domain is fully corrected") {
  const auto v = ab();
  const ExactDistribution pr = two_point(v, 0.5), pg = two_point(v, 0.8);
  const auto d = optimal_discriminator(pr, pg);
  const auto f = exact_filtered_distribution(pg, d, 0.4, 0.5);
  CHECK(std::abs(f.c_exact - 0.4) <= 1e-12);
  CHECK(std::abs(f.dist.probs[0] - 0.5) <= 1e-12);
  CHECK(std::abs(f.dist.probs[1] - 0.5) <= 1e-12);
}

TEST_CASE("exact_uc on the two-sequence domain") {
  const auto v = ab();
  const ExactDistribution pr = two_point(v, 0.5), pg = two_point(v, 0.8);
  const auto d = optimal_discriminator(pr, pg);
  const ExactUc e = exact_uc(pg, d, 0.4);
  CHECK(e.u_c > 0.5 / 1.3);
  CHECK(e.u_c <= 0.5 / 1.3 + 1e-4);
  CHECK(std::abs(e.acceptance - 0.4) <= 1e-12);
  CHECK(e.achievable);
  CHECK(exact_uc(pg, d, 1.0).u_c == 0.0);
}

TEST_CASE("unachievable targets report the floor") {
  const auto v = ab();
  const ExactDistribution pg = two_point(v, 0.8);
  // Overconfident scores: odds 9 and 4, so even u_c = 1 accepts 0.8 at c = 0.1.
  const std::vector<double> d = {0.9, 0.8};
  const ExactUc e = exact_uc(pg, d, 0.1);
  CHECK_FALSE(e.achievable);
  CHECK(e.u_c == 1.0);
  CHECK(e.min_acceptance == doctest::Approx(0.8 * 0.9 + 0.2 * 0.4));
  CHECK(e.acceptance == doctest::Approx(e.min_acceptance));
  CHECK(e.max_acceptance == doctest::Approx(1.0));
}

TEST_CASE("D* targets below the clamp are always reachable") {
  const auto v = ab();
  const ExactDistribution pr = two_point(v, 0.5), pg = two_point(v, 0.8);
  const auto d = optimal_discriminator(pr, pg);
  const ExactUc e = exact_uc(pg, d, 0.1);
  CHECK(e.achievable);
  CHECK(std::abs(e.acceptance - 0.1) <= 1e-12);
}

TEST_CASE("exact_uc is monotone in c on every scenario") {
  for (const auto& id : kScenarios) {
    const Scenario s = build_scenario(load_scenario(id), 7);
    const auto d = s.optimal_d();
    CHECK(exact_uc(s.p_theta, d, 0.3).u_c >= exact_uc(s.p_theta, d, 0.7).u_c);
  }
}

TEST_CASE("exact correction below the boundary on every scenario") {
  for (const auto& id : kScenarios) {
    const Scenario s = build_scenario(load_scenario(id), 7);
    const auto d = s.optimal_d();
    for (double c : {0.2, 0.4, 0.5, 0.8}) {
      const ExactUc e = exact_uc(s.p_theta, d, c);
      const auto f = exact_filtered_distribution(s.p_theta, d, c, e.u_c);
      CHECK(std::abs(f.dist.total() - 1.0) <= 1e-12);
      // p_new = (c / c_exact) p_r below the boundary; equal when c is hit.
      for (size_t i = 0; i < f.dist.size(); ++i) {
        if (d[i] < e.u_c) {
          CHECK(std::abs(f.dist.probs[i] - c / f.c_exact * s.p_r.probs[i]) <= 1e-9);
        }
      }
      if (std::abs(f.c_exact - c) <= 1e-12) {
        for (size_t i = 0; i < f.dist.size(); ++i) {
          if (d[i] < e.u_c) CHECK(std::abs(f.dist.probs[i] - s.p_r.probs[i]) <= 1e-9);
        }
      }
      CHECK(tv_distance(f.dist, s.p_r) <= tv_distance(s.p_theta, s.p_r) + 1e-12);
    }
  }
}

TEST_CASE("acceptance is non-increasing in u_c") {
  for (const auto& id : kScenarios) {
    const Scenario s = build_scenario(load_scenario(id), 7);
    const auto d = s.optimal_d();
    double prev = 2.0;
    for (int k = 0; k <= 200; ++k) {
      const double acc = exact_acceptance(s.p_theta, d, 0.5, k / 200.0);
      CHECK(acc <= prev + 1e-12);
      prev = acc;
    }
  }
}

TEST_CASE("rejected distribution complements the accepted one") {
  const Scenario s = build_scenario(load_scenario("s3"), 7);
  const auto d = s.optimal_d();
  const double u = 0.6, c = 0.5;
  const auto acc = exact_filtered_distribution(s.p_theta, d, c, u);
  const auto rej = exact_rejected_distribution(s.p_theta, d, c, u);
  for (size_t i = 0; i < s.p_theta.size(); ++i) {
    const double mix = acc.c_exact * acc.dist.probs[i] + (1.0 - acc.c_exact) * rej.probs[i];
    CHECK(std::abs(mix - s.p_theta.probs[i]) <= 1e-12);
  }
  CHECK(tv_distance(rej, s.p_r) >= tv_distance(s.p_theta, s.p_r));
}

TEST_CASE("zero acceptance is degenerate") {
  const auto v = ab();
  const ExactDistribution pg = two_point(v, 0.5);
  const std::vector<double> d = {0.0, 0.0};
  CHECK_THROWS_AS(exact_filtered_distribution(pg, d, 0.5, 0.5), DegenerateError);
}

TEST_CASE("distance examples") {
  const auto v = ab();
  const ExactDistribution p = two_point(v, 0.8), q = two_point(v, 0.5);
  CHECK(tv_distance(p, p) == 0.0);
  CHECK(tv_distance(p, q) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(js_divergence(p, p) == 0.0);
  const double m0 = 0.65, m1 = 0.35;
  const double js = 0.5 * (0.8 * std::log(0.8 / m0) + 0.2 * std::log(0.2 / m1)) +
                    0.5 * (0.5 * std::log(0.5 / m0) + 0.5 * std::log(0.5 / m1));
  CHECK(js_divergence(p, q) == doctest::Approx(js).epsilon(1e-12));
  const ExactDistribution point = two_point(v, 1.0);
  CHECK(kl_divergence(q, point) == INFINITY);
}

TEST_CASE("property: distances on random distributions") {
  Rng rng(77);
  const auto v = std::make_shared<const Vocab>(std::vector<std::string>{"a", "b", "c"});
  for (int trial = 0; trial < 200; ++trial) {
    const int len = 1 + static_cast<int>(rng.below(3));
    const auto p = random_dist(v, len, rng, 0.2);
    const auto q = random_dist(v, len, rng, 0.2);
    const double tv = tv_distance(p, q);
    CHECK(tv >= 0.0);
    CHECK(tv <= 1.0 + 1e-12);
    CHECK(tv == doctest::Approx(tv_distance(q, p)).epsilon(1e-12));
    const double js = js_divergence(p, q);
    CHECK(js >= -1e-15);
    CHECK(js <= std::log(2.0) + 1e-12);
    CHECK(kl_divergence(p, q) >= 0.0);
  }
}

TEST_CASE("property: exact filter invariants on random pairs") {
  Rng rng(78);
  const auto v = std::make_shared<const Vocab>(std::vector<std::string>{"a", "b", "c"});
  for (int trial = 0; trial < 100; ++trial) {
    const int len = 1 + static_cast<int>(rng.below(3));
    const auto pr = random_dist(v, len, rng, 0.1);
    const auto pg = random_dist(v, len, rng, 0.0);
    const auto d = optimal_discriminator(pr, pg);
    const double c = rng.uniform(0.05, 1.0);
    const ExactUc e = exact_uc(pg, d, c);
    CHECK(e.u_c >= 0.0);
    CHECK(e.u_c <= 1.0);
    CHECK(e.min_acceptance <= e.max_acceptance + 1e-12);
    if (e.achievable) CHECK(e.acceptance >= e.min_acceptance - 1e-12);
    const auto f = exact_filtered_distribution(pg, d, c, e.u_c);
    CHECK(std::abs(f.dist.total() - 1.0) <= 1e-12);
    for (size_t i = 0; i < f.dist.size(); ++i) {
      if (d[i] < e.u_c) {
        CHECK(std::abs(f.dist.probs[i] - c / f.c_exact * pr.probs[i]) <= 1e-9);
      }
    }
    // c_exact is non-increasing in u_c.
    const double u1 = rng.uniform(), u2 = rng.uniform();
    CHECK(exact_acceptance(pg, d, c, std::min(u1, u2)) >=
          exact_acceptance(pg, d, c, std::max(u1, u2)) - 1e-12);
  }
}

TEST_CASE("empirical distributions ignore out-of-domain samples") {
  const auto v = ab();
  const ExactDistribution like = two_point(v, 0.5);
  const Corpus c{v, {Sequence{4}, Sequence{4}, Sequence{5}, Sequence{4, 4}}, Split::kTest};
  const auto emp = empirical_distribution(like, c);
  CHECK(emp.probs[0] == doctest::Approx(2.0 / 3));
  CHECK(emp.probs[1] == doctest::Approx(1.0 / 3));
}

TEST_CASE("table discriminator rejects unknown sequences") {
  const auto v = ab();
  const TableDiscriminator t(two_point(v, 0.5), {0.2, 0.7});
  CHECK(t.predict(Sequence{5}) == 0.7);
  CHECK_THROWS_AS(t.predict(Sequence{4, 4}), InputError);
  CHECK(tabulate(t, two_point(v, 0.5)) == std::vector<double>{0.2, 0.7});
}

TEST_CASE("sampling tv floor") {
  const VocabPtr v = ab();
  const ExactDistribution half = two_point(v, 0.5);
  // 0.5 * 2 * sqrt(2 * 0.25 / (pi * n)).
  CHECK(sampling_tv_floor(half, 100) == doctest::Approx(std::sqrt(0.5 / (std::numbers::pi * 100))));
  CHECK(sampling_tv_floor(two_point(v, 1.0), 10) == 0.0);
  const size_t n = samples_for_tv_floor(half, 0.001, 1000);
  CHECK(n % 1000 == 0);
  CHECK(sampling_tv_floor(half, n) <= 0.001);
  CHECK(sampling_tv_floor(half, n - 1000) > 0.001);
  CHECK(samples_for_tv_floor(half, 1.0, 50) == 50);
  CHECK_THROWS_AS(sampling_tv_floor(half, 0), InputError);
}

TEST_CASE("empirical tv tracks the sampling floor") {
  Rng rng(11);
  const ExactDistribution p = random_dist(ab(), 6, rng, 0.0);
  const size_t n = 20000;
  const int reps = 40;
  double mean_tv = 0.0;
  for (int r = 0; r < reps; ++r) {
    ExactDistribution emp = p;
    std::fill(emp.probs.begin(), emp.probs.end(), 0.0);
    for (size_t k = 0; k < n; ++k) emp.probs[rng.categorical(p.probs)] += 1.0 / n;
    mean_tv += tv_distance(p, emp) / reps;
  }
  CHECK(mean_tv == doctest::Approx(sampling_tv_floor(p, n)).epsilon(0.1));
}
