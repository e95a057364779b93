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

#ifndef FILTERGEN_COMMON_H_
#define FILTERGEN_COMMON_H_

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace filtergen {

// Malformed or out-of-domain input supplied by the caller.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A computation reached a state with no meaningful answer (e.g. zero mass).
class DegenerateError : public std::runtime_error {
 public:
  explicit DegenerateError(const std::string& what)
      : std::runtime_error(what) {}
};

// Pseudo-random stream. Wraps mt19937_64 and draws uniforms directly from
// the raw bits so results do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n);

  // Index drawn proportionally to non-negative weights. Weights need not be
  // normalized; at least one must be positive.
  size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Deterministic seed for a named sub-stream of a master seed.
uint64_t derive_seed(uint64_t master, std::string_view stage,
                     uint64_t index = 0);

// Pairwise summation; keeps reductions independent of chunking order.
double pairwise_sum(std::span<const double> values);

}  // namespace filtergen

#endif  // FILTERGEN_COMMON_H_
