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

#ifndef VSCREEN_AUTODIFF_HPP
#define VSCREEN_AUTODIFF_HPP

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace vscreen::ad {

struct Var {
  int id = -1;
};

/**
 * Reverse-mode tape over dense double matrices. Covers exactly the layer types used by the
 * message-passing models: dense algebra, pointwise nonlinearities, concatenation, row
 * gather/scatter, segment means, cosine similarity and the shipped losses.
 */
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&)            = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Eigen::MatrixXd value);
  Var param(Eigen::MatrixXd value);

  [[nodiscard]] const Eigen::MatrixXd& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  //! Gradient of the last backward() target; zero matrix if never reached.
  [[nodiscard]] Eigen::MatrixXd grad(Var v) const;
  [[nodiscard]] std::size_t     size() const { return nodes_.size(); }

  //! Seeds d(target)/d(target) = 1; target must be 1 x 1.
  void backward(Var target);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  //! Adds a 1 x k row to every row of a.
  Var addRow(Var a, Var row);
  Var mul(Var a, Var b);  //!< elementwise
  Var scale(Var a, double c);
  //! Multiplies every entry of a by the 1 x 1 variable s.
  Var scaleBy(Var a, Var s);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var abs(Var a);
  Var concatCols(std::span<const Var> parts);
  //! out.row(k) = a.row(idx[k]).
  Var gatherRows(Var a, std::vector<int> idx);
  //! out.row(idx[k]) += a.row(k), out has `rows` rows.
  Var scatterSumRows(Var a, std::vector<int> idx, int rows);
  //! Mean of rows per segment; empty segments give zero rows.
  Var segmentMean(Var a, std::vector<int> segment, int segments);
  Var sum(Var a);
  Var mean(Var a);

  Var mseLoss(Var pred, const Eigen::MatrixXd& target);
  Var maeLoss(Var pred, const Eigen::MatrixXd& target);
  //! Mean binary cross-entropy on logits with 0/1 targets.
  Var bceWithLogits(Var logits, const Eigen::MatrixXd& target);
  //! Pairwise cosine similarities between rows of a and rows of b.
  Var cosineMatrix(Var a, Var b);
  //! Mean cross-entropy of softmax over each row (or column) with the diagonal as target.
  Var diagonalCrossEntropy(Var logits, bool overColumns);

 private:
  struct Node {
    Eigen::MatrixXd       value;
    Eigen::MatrixXd       grad;
    bool                  needsGrad = false;
    std::function<void()> backward;
  };

  Var  push(Eigen::MatrixXd value, bool needsGrad);
  bool needs(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needsGrad; }
  void accumulate(Var v, const Eigen::MatrixXd& g);
  const Eigen::MatrixXd& gradRef(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }

  std::vector<Node> nodes_;
};

}  // namespace vscreen::ad

#endif  // VSCREEN_AUTODIFF_HPP
