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

#include "filtergen/params.h"

#include <cmath>

namespace filtergen {

int ParamSet::add(std::string name, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw InputError("ParamSet: empty block");
  if (find(name) >= 0) throw InputError("ParamSet: duplicate " + name);
  blocks_.push_back({std::move(name), values_.size(), rows, cols});
  values_.resize(values_.size() + blocks_.back().size(), 0.0);
  return static_cast<int>(blocks_.size()) - 1;
}

int ParamSet::find(const std::string& name) const {
  for (size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void ParamSet::init_uniform(int i, double scale, Rng& rng) {
  const Block& b = blocks_[i];
  for (size_t k = 0; k < b.size(); ++k) {
    values_[b.offset + k] = rng.uniform(-scale, scale);
  }
}

nlohmann::json ParamSet::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& b : blocks_) {
    j[b.name] = std::vector<double>(values_.begin() + b.offset,
                                    values_.begin() + b.offset + b.size());
  }
  return j;
}

void ParamSet::load_json(const nlohmann::json& j) {
  for (const auto& b : blocks_) {
    if (!j.contains(b.name)) throw InputError("checkpoint missing " + b.name);
    auto arr = j.at(b.name).get<std::vector<double>>();
    if (arr.size() != b.size()) {
      throw InputError("checkpoint block " + b.name + " has wrong size");
    }
    std::copy(arr.begin(), arr.end(), values_.begin() + b.offset);
  }
}

AdamOptimizer::AdamOptimizer(size_t n, double lr, double beta1, double beta2,
                             double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0),
      v_(n, 0.0) {}

void AdamOptimizer::step(std::vector<double>& params,
                         const std::vector<double>& grad,
                         const std::vector<bool>& mask) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    m_[i] = beta1_ * m_[i] + (1 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void MomentumSgd::step(std::vector<double>& params,
                       const std::vector<double>& grad,
                       const std::vector<bool>& mask) {
  for (size_t i = 0; i < params.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    velocity_[i] = momentum_ * velocity_[i] - lr_ * grad[i];
    params[i] += velocity_[i];
  }
}

}  // namespace filtergen
