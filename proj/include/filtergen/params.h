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

#ifndef FILTERGEN_PARAMS_H_
#define FILTERGEN_PARAMS_H_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "filtergen/common.h"
#include "json.hpp"

namespace filtergen {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;

// Named dense blocks packed into one flat vector, so optimizers, gradient
// checks and serialization all see a single parameter array.
class ParamSet {
 public:
  struct Block {
    std::string name;
    size_t offset;
    int rows;
    int cols;
    size_t size() const { return static_cast<size_t>(rows) * cols; }
  };

  // Returns the block index.
  int add(std::string name, int rows, int cols);

  size_t size() const { return values_.size(); }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const Block& block(int i) const { return blocks_[i]; }
  int find(const std::string& name) const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  MatrixView view(int i) { return view(values_, i); }
  ConstMatrixView view(int i) const { return view(values_, i); }

  // Views into any buffer with this layout (e.g. a gradient).
  MatrixView view(std::vector<double>& buf, int i) const {
    const Block& b = blocks_[i];
    return MatrixView(buf.data() + b.offset, b.rows, b.cols);
  }
  ConstMatrixView view(const std::vector<double>& buf, int i) const {
    const Block& b = blocks_[i];
    return ConstMatrixView(buf.data() + b.offset, b.rows, b.cols);
  }

  // Uniform(-scale, scale) init of one block.
  void init_uniform(int i, double scale, Rng& rng);

  nlohmann::json to_json() const;
  // Layout must already be declared; fills values by name.
  void load_json(const nlohmann::json& j);

 private:
  std::vector<double> values_;
  std::vector<Block> blocks_;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(size_t n, double lr, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);
  // `mask[i] == false` freezes parameter i; empty mask trains everything.
  void step(std::vector<double>& params, const std::vector<double>& grad,
            const std::vector<bool>& mask = {});

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

class MomentumSgd {
 public:
  MomentumSgd(size_t n, double lr, double momentum)
      : lr_(lr), momentum_(momentum), velocity_(n, 0.0) {}
  void step(std::vector<double>& params, const std::vector<double>& grad,
            const std::vector<bool>& mask = {});

 private:
  double lr_, momentum_;
  std::vector<double> velocity_;
};

}  // namespace filtergen

#endif  // FILTERGEN_PARAMS_H_
