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

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "vscreen/autodiff.hpp"
#include "vscreen/errors.hpp"

using namespace vscreen;
using ad::Tape;
using ad::Var;

namespace {

using Fn = std::function<Var(Tape&, Var)>;

Eigen::MatrixXd randomMatrix(std::mt19937_64& rng, int r, int c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return u(rng); });
}

// Max relative error between the tape gradient and central differences.
double checkGradient(const Fn& f, const Eigen::MatrixXd& x0, double h = 1e-5) {
  Tape t;
  Var  x    = t.param(x0);
  Var  loss = f(t, x);
  t.backward(loss);
  const Eigen::MatrixXd g = t.grad(x);

  auto eval = [&](const Eigen::MatrixXd& x1) {
    Tape s;
    return s.value(f(s, s.constant(x1)))(0, 0);
  };
  double worst = 0.0;
  for (Eigen::Index k = 0; k < x0.size(); ++k) {
    Eigen::MatrixXd p = x0;
    Eigen::MatrixXd m = x0;
    p.data()[k] += h;
    m.data()[k] -= h;
    const double num = (eval(p) - eval(m)) / (2.0 * h);
    worst            = std::max(worst, std::abs(num - g.data()[k]) / std::max({std::abs(num), std::abs(g.data()[k]), 1e-6}));
  }
  return worst;
}

}  // namespace

TEST(Tape, LinearQuadraticIsExact) {
  std::mt19937_64       rng(1);
  const Eigen::MatrixXd in     = randomMatrix(rng, 6, 3);
  const Eigen::MatrixXd target = randomMatrix(rng, 6, 1);
  const Fn              f      = [&](Tape& t, Var w) { return t.mseLoss(t.matmul(t.constant(in), w), target); };
  const Eigen::MatrixXd w0     = randomMatrix(rng, 3, 1);
  EXPECT_LT(checkGradient(f, w0, 1e-3), 1e-8);

  // Closed form 2/n X^T (Xw - y).
  Tape t;
  Var  w = t.param(w0);
  t.backward(f(t, w));
  const Eigen::MatrixXd expected = 2.0 / 6.0 * in.transpose() * (in * w0 - target);
  EXPECT_LT((t.grad(w) - expected).norm(), 1e-12);
}

TEST(Tape, EveryOpMatchesFiniteDifferences) {
  std::mt19937_64       rng(2);
  const Eigen::MatrixXd b   = randomMatrix(rng, 3, 4);
  const Eigen::MatrixXd row = randomMatrix(rng, 1, 3);
  const Eigen::MatrixXd y   = randomMatrix(rng, 5, 3);
  const Eigen::MatrixXd bin = (randomMatrix(rng, 5, 3).array() > 0.0).cast<double>();
  const std::vector<std::pair<const char*, Fn>> cases{
      {"matmul", [&](Tape& t, Var x) { return t.sum(t.matmul(x, t.constant(b))); }},
      {"add", [&](Tape& t, Var x) { return t.sum(t.mul(t.add(x, x), t.constant(y))); }},
      {"sub", [&](Tape& t, Var x) { return t.sum(t.mul(t.sub(t.constant(y), x), x)); }},
      {"addRow", [&](Tape& t, Var x) { return t.mseLoss(t.addRow(x, t.constant(row)), y); }},
      {"addRowBias", [&](Tape& t, Var x) { return t.mseLoss(t.addRow(t.constant(y), t.gatherRows(x, {0})), y.array() + 1.0); }},
      {"mul", [&](Tape& t, Var x) { return t.sum(t.mul(x, x)); }},
      {"scale", [&](Tape& t, Var x) { return t.mean(t.scale(t.mul(x, x), -2.5)); }},
      {"scaleBy", [&](Tape& t, Var x) { return t.sum(t.scaleBy(t.mul(x, x), t.gatherRows(t.matmul(x, t.constant(b.col(0))), {1}))); }},
      {"relu", [&](Tape& t, Var x) { return t.sum(t.mul(t.relu(x), t.constant(y))); }},
      {"sigmoid", [&](Tape& t, Var x) { return t.sum(t.mul(t.sigmoid(x), t.constant(y))); }},
      {"abs", [&](Tape& t, Var x) { return t.sum(t.mul(t.abs(x), t.constant(y))); }},
      {"concat", [&](Tape& t, Var x) {
         const Var parts[3] = {x, t.constant(y), t.scale(x, 3.0)};
         return t.mseLoss(t.concatCols(parts), Eigen::MatrixXd::Ones(5, 9));
       }},
      {"gather", [&](Tape& t, Var x) { return t.mseLoss(t.gatherRows(x, {4, 0, 0, 2}), y.topRows(4)); }},
      {"scatter", [&](Tape& t, Var x) { return t.mseLoss(t.scatterSumRows(x, {1, 1, 0, 3, 1}, 4), y.topRows(4)); }},
      {"segmentMean", [&](Tape& t, Var x) { return t.mseLoss(t.segmentMean(x, {2, 0, 2, 2, 0}, 4), y.topRows(4)); }},
      {"mae", [&](Tape& t, Var x) { return t.maeLoss(x, y); }},
      {"bce", [&](Tape& t, Var x) { return t.bceWithLogits(t.scale(x, 4.0), bin); }},
      {"cosine", [&](Tape& t, Var x) { return t.sum(t.mul(t.cosineMatrix(x, t.constant(y)), t.cosineMatrix(x, x))); }},
      {"xentRows", [&](Tape& t, Var x) { return t.diagonalCrossEntropy(t.matmul(x, t.constant(y.transpose())), false); }},
      {"xentCols", [&](Tape& t, Var x) { return t.diagonalCrossEntropy(t.matmul(x, t.constant(y.transpose())), true); }},
  };
  const Eigen::MatrixXd x0 = randomMatrix(rng, 5, 3);
  for (const auto& [name, f] : cases) EXPECT_LT(checkGradient(f, x0), 1e-6) << name;
}

TEST(Tape, SharedSubexpressionsAccumulate) {
  Tape t;
  Var  x = t.param(Eigen::MatrixXd::Constant(1, 1, 3.0));
  Var  y = t.mul(x, x);
  t.backward(t.add(y, t.mul(y, x)));  // x^2 + x^3
  EXPECT_DOUBLE_EQ(t.grad(x)(0, 0), 6.0 + 27.0);
}

TEST(Tape, ConstantsReceiveNoGradient) {
  Tape t;
  Var  c = t.constant(Eigen::MatrixXd::Ones(2, 2));
  Var  p = t.param(Eigen::MatrixXd::Ones(2, 2));
  t.backward(t.sum(t.mul(c, p)));
  EXPECT_EQ(t.grad(c).norm(), 0.0);
  EXPECT_EQ(t.grad(p), Eigen::MatrixXd::Ones(2, 2));
}

TEST(Tape, LossValues) {
  Tape            t;
  Eigen::MatrixXd logits(2, 1);
  logits << 800.0, -800.0;
  Eigen::MatrixXd labels(2, 1);
  labels << 1.0, 0.0;
  EXPECT_NEAR(t.value(t.bceWithLogits(t.constant(logits), labels))(0, 0), 0.0, 1e-300);
  EXPECT_NEAR(t.value(t.bceWithLogits(t.constant(Eigen::MatrixXd::Zero(2, 1)), labels))(0, 0), std::log(2.0), 1e-15);

  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_NEAR(t.value(t.diagonalCrossEntropy(t.constant(eye), false))(0, 0), std::log1p(std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(t.value(t.diagonalCrossEntropy(t.constant(Eigen::MatrixXd::Zero(4, 4)), true))(0, 0), std::log(4.0), 1e-15);

  Eigen::MatrixXd a(2, 2);
  a << 3.0, 4.0, 0.0, -2.0;
  const auto cos = t.value(t.cosineMatrix(t.constant(a), t.constant(a)));
  EXPECT_NEAR(cos(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(cos(0, 1), -0.8, 1e-15);
}

TEST(Tape, SegmentMeanOfEmptySegmentIsZero) {
  Tape t;
  Var  x = t.param(Eigen::MatrixXd::Constant(2, 2, 5.0));
  Var  m = t.segmentMean(x, {0, 0}, 2);
  EXPECT_EQ(t.value(m).row(1).norm(), 0.0);
  EXPECT_EQ(t.value(m).row(0), Eigen::RowVector2d(5.0, 5.0));
}

TEST(Tape, ShapeErrors) {
  Tape t;
  Var  a = t.constant(Eigen::MatrixXd::Zero(2, 3));
  Var  b = t.constant(Eigen::MatrixXd::Zero(2, 3));
  try {
    (void)t.matmul(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  EXPECT_THROW((void)t.add(a, t.constant(Eigen::MatrixXd::Zero(3, 2))), Error);
  EXPECT_THROW((void)t.gatherRows(a, {2}), Error);
  EXPECT_THROW(t.backward(a), Error);
}
