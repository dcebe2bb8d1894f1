// SPDX-FileCopyrightText: Copyright (c) 2026 vscreen contributors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VSCREEN_SRC_ADAM_HPP
#define VSCREEN_SRC_ADAM_HPP

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace vscreen::detail {

using TensorMap = std::map<std::string, Eigen::MatrixXd>;

//! Adam with an optional half-cosine anneal of the step size over `totalSteps`.
class Adam {
 public:
  Adam(const TensorMap& params, double lr, long totalSteps, bool cosine) : lr_(lr), total_(totalSteps), cosine_(cosine) {
    for (const auto& [name, t] : params) {
      m1_.emplace(name, Eigen::MatrixXd::Zero(t.rows(), t.cols()));
      m2_.emplace(name, Eigen::MatrixXd::Zero(t.rows(), t.cols()));
    }
  }

  void step(TensorMap& params, const TensorMap& grads) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps   = 1e-8;
    const double     rate =
        cosine_ && total_ > 0 ? lr_ * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step_) / static_cast<double>(total_)))
                              : lr_;
    ++step_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
    for (auto& [name, tensor] : params) {
      const auto& grad = grads.at(name);
      auto&       a    = m1_.at(name);
      auto&       b    = m2_.at(name);
      a                = kBeta1 * a + (1.0 - kBeta1) * grad;
      b                = kBeta2 * b + (1.0 - kBeta2) * grad.cwiseAbs2();
      tensor.array() -= rate * (a.array() / c1) / ((b.array() / c2).sqrt() + kEps);
    }
  }

 private:
  double    lr_;
  long      total_;
  bool      cosine_;
  long      step_ = 0;
  TensorMap m1_;
  TensorMap m2_;
};

//! In-place Fisher-Yates shuffle with an explicit draw order.
inline void shuffleIndices(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

inline uint64_t mixSeed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z          = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z          = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace vscreen::detail

#endif  // VSCREEN_SRC_ADAM_HPP
