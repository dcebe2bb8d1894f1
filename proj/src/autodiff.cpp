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

#include "vscreen/autodiff.hpp"

#include <cmath>

#include "vscreen/errors.hpp"

namespace vscreen::ad {

namespace {

void requireShape(bool ok, const char* op) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, std::string("incompatible shapes in ") + op);
}

double logSigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

}  // namespace

Var Tape::push(Eigen::MatrixXd value, bool needsGrad) {
  Node n;
  n.value     = std::move(value);
  n.needsGrad = needsGrad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Eigen::MatrixXd value) { return push(std::move(value), false); }
Var Tape::param(Eigen::MatrixXd value) { return push(std::move(value), true); }

Eigen::MatrixXd Tape::grad(Var v) const {
  const auto& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() == 0) return Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Eigen::MatrixXd& g) {
  auto& n = nodes_[static_cast<std::size_t>(v.id)];
  if (!n.needsGrad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var target) {
  requireShape(value(target).rows() == 1 && value(target).cols() == 1, "backward (target must be scalar)");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[static_cast<std::size_t>(target.id)].grad = Eigen::MatrixXd::Ones(1, 1);
  for (int i = target.id; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0 || !n.backward) continue;
    n.backward();
  }
}

Var Tape::matmul(Var a, Var b) {
  requireShape(value(a).cols() == value(b).rows(), "matmul");
  Var out = push(value(a) * value(b), needs(a) || needs(b));
  if (needs(out)) {
    nodes_.back().backward = [this, a, b, out] {
      const auto& g = gradRef(out);
      if (needs(a)) accumulate(a, g * value(b).transpose());
      if (needs(b)) accumulate(b, value(a).transpose() * g);
    };
  }
  return out;
}

Var Tape::add(Var a, Var b) {
  requireShape(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add");
  Var out = push(value(a) + value(b), needs(a) || needs(b));
  if (needs(out)) {
    nodes_.back().backward = [this, a, b, out] {
      accumulate(a, gradRef(out));
      accumulate(b, gradRef(out));
    };
  }
  return out;
}

Var Tape::sub(Var a, Var b) {
  requireShape(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "sub");
  Var out = push(value(a) - value(b), needs(a) || needs(b));
  if (needs(out)) {
    nodes_.back().backward = [this, a, b, out] {
      accumulate(a, gradRef(out));
      if (needs(b)) accumulate(b, -gradRef(out));
    };
  }
  return out;
}

Var Tape::addRow(Var a, Var row) {
  requireShape(value(row).rows() == 1 && value(row).cols() == value(a).cols(), "addRow");
  Eigen::MatrixXd v = value(a);
  v.rowwise() += value(row).row(0);
  Var out = push(std::move(v), needs(a) || needs(row));
  if (needs(out)) {
    nodes_.back().backward = [this, a, row, out] {
      accumulate(a, gradRef(out));
      if (needs(row)) accumulate(row, gradRef(out).colwise().sum());
    };
  }
  return out;
}

Var Tape::mul(Var a, Var b) {
  requireShape(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "mul");
  Var out = push(value(a).cwiseProduct(value(b)), needs(a) || needs(b));
  if (needs(out)) {
    nodes_.back().backward = [this, a, b, out] {
      if (needs(a)) accumulate(a, gradRef(out).cwiseProduct(value(b)));
      if (needs(b)) accumulate(b, gradRef(out).cwiseProduct(value(a)));
    };
  }
  return out;
}

Var Tape::scale(Var a, double c) {
  Var out = push(value(a) * c, needs(a));
  if (needs(out)) {
    nodes_.back().backward = [this, a, c, out] { accumulate(a, gradRef(out) * c); };
  }
  return out;
}

Var Tape::scaleBy(Var a, Var s) {
  requireShape(value(s).rows() == 1 && value(s).cols() == 1, "scaleBy");
  Var out = push(value(a) * value(s)(0, 0), needs(a) || needs(s));
  if (needs(out)) {
    nodes_.back().backward = [this, a, s, out] {
      if (needs(a)) accumulate(a, gradRef(out) * value(s)(0, 0));
      if (needs(s)) accumulate(s, Eigen::MatrixXd::Constant(1, 1, gradRef(out).cwiseProduct(value(a)).sum()));
    };
  }
  return out;
}

Var Tape::relu(Var a) {
  Var out = push(value(a).cwiseMax(0.0), needs(a));
  if (needs(out)) {
    nodes_.back().backward = [this, a, out] {
      accumulate(a, gradRef(out).cwiseProduct(value(a).unaryExpr([](double x) { return x > 0.0 ? 1.0 : 0.0; })));
    };
  }
  return out;
}

Var Tape::sigmoid(Var a) {
  Var out = push(value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); }), needs(a));
  if (needs(out)) {
    nodes_.back().backward = [this, a, out] {
      const auto& y = value(out);
      accumulate(a, gradRef(out).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
    };
  }
  return out;
}

Var Tape::abs(Var a) {
  Var out = push(value(a).cwiseAbs(), needs(a));
  if (needs(out)) {
    nodes_.back().backward = [this, a, out] {
      accumulate(a, gradRef(out).cwiseProduct(value(a).unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); })));
    };
  }
  return out;
}

Var Tape::concatCols(std::span<const Var> parts) {
  requireShape(!parts.empty(), "concatCols");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index       cols = 0;
  bool               grad = false;
  for (Var p : parts) {
    requireShape(value(p).rows() == rows, "concatCols");
    cols += value(p).cols();
    grad = grad || needs(p);
  }
  Eigen::MatrixXd v(rows, cols);
  Eigen::Index    at = 0;
  for (Var p : parts) {
    v.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  Var out = push(std::move(v), grad);
  if (grad) {
    std::vector<Var> copy(parts.begin(), parts.end());
    nodes_.back().backward = [this, copy, out] {
      Eigen::Index offset = 0;
      for (Var p : copy) {
        const auto w = value(p).cols();
        if (needs(p)) accumulate(p, gradRef(out).middleCols(offset, w));
        offset += w;
      }
    };
  }
  return out;
}

Var Tape::gatherRows(Var a, std::vector<int> idx) {
  const auto&     src = value(a);
  Eigen::MatrixXd v(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    requireShape(idx[k] >= 0 && idx[k] < src.rows(), "gatherRows");
    v.row(static_cast<Eigen::Index>(k)) = src.row(idx[k]);
  }
  Var out = push(std::move(v), needs(a));
  if (needs(out)) {
    nodes_.back().backward = [this, a, idx = std::move(idx), out] {
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(value(a).rows(), value(a).cols());
      const auto&     go = gradRef(out);
      for (std::size_t k = 0; k < idx.size(); ++k) g.row(idx[k]) += go.row(static_cast<Eigen::Index>(k));
      accumulate(a, g);
    };
  }
  return out;
}

Var Tape::scatterSumRows(Var a, std::vector<int> idx, int rows) {
  const auto& src = value(a);
  requireShape(static_cast<Eigen::Index>(idx.size()) == src.rows(), "scatterSumRows");
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(rows, src.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    requireShape(idx[k] >= 0 && idx[k] < rows, "scatterSumRows");
    v.row(idx[k]) += src.row(static_cast<Eigen::Index>(k));
  }
  Var out = push(std::move(v), needs(a));
  if (needs(out)) {
    nodes_.back().backward = [this, a, idx = std::move(idx), out] {
      const auto&     go = gradRef(out);
      Eigen::MatrixXd g(static_cast<Eigen::Index>(idx.size()), go.cols());
      for (std::size_t k = 0; k < idx.size(); ++k) g.row(static_cast<Eigen::Index>(k)) = go.row(idx[k]);
      accumulate(a, g);
    };
  }
  return out;
}

Var Tape::segmentMean(Var a, std::vector<int> segment, int segments) {
  const auto& src = value(a);
  requireShape(static_cast<Eigen::Index>(segment.size()) == src.rows(), "segmentMean");
  std::vector<double> count(static_cast<std::size_t>(segments), 0.0);
  for (int s : segment) {
    requireShape(s >= 0 && s < segments, "segmentMean");
    count[static_cast<std::size_t>(s)] += 1.0;
  }
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(segments, src.cols());
  for (std::size_t k = 0; k < segment.size(); ++k) v.row(segment[k]) += src.row(static_cast<Eigen::Index>(k));
  for (int s = 0; s < segments; ++s) {
    if (count[static_cast<std::size_t>(s)] > 0.0) v.row(s) /= count[static_cast<std::size_t>(s)];
  }
  Var out = push(std::move(v), needs(a));
  if (needs(out)) {
    nodes_.back().backward = [this, a, segment = std::move(segment), count = std::move(count), out] {
      const auto&     go = gradRef(out);
      Eigen::MatrixXd g(static_cast<Eigen::Index>(segment.size()), go.cols());
      for (std::size_t k = 0; k < segment.size(); ++k) {
        g.row(static_cast<Eigen::Index>(k)) = go.row(segment[k]) / count[static_cast<std::size_t>(segment[k])];
      }
      accumulate(a, g);
    };
  }
  return out;
}

Var Tape::sum(Var a) {
  Var out = push(Eigen::MatrixXd::Constant(1, 1, value(a).sum()), needs(a));
  if (needs(out)) {
    nodes_.back().backward = [this, a, out] {
      accumulate(a, Eigen::MatrixXd::Constant(value(a).rows(), value(a).cols(), gradRef(out)(0, 0)));
    };
  }
  return out;
}

Var Tape::mean(Var a) {
  const double n = static_cast<double>(value(a).size());
  requireShape(n > 0, "mean");
  return scale(sum(a), 1.0 / n);
}

Var Tape::mseLoss(Var pred, const Eigen::MatrixXd& target) {
  requireShape(value(pred).rows() == target.rows() && value(pred).cols() == target.cols() && target.size() > 0, "mseLoss");
  const Eigen::MatrixXd diff = value(pred) - target;
  const double          n    = static_cast<double>(diff.size());
  Var out = push(Eigen::MatrixXd::Constant(1, 1, diff.squaredNorm() / n), needs(pred));
  if (needs(out)) {
    nodes_.back().backward = [this, pred, diff, n, out] { accumulate(pred, diff * (2.0 * gradRef(out)(0, 0) / n)); };
  }
  return out;
}

Var Tape::maeLoss(Var pred, const Eigen::MatrixXd& target) {
  requireShape(value(pred).rows() == target.rows() && value(pred).cols() == target.cols() && target.size() > 0, "maeLoss");
  const Eigen::MatrixXd diff = value(pred) - target;
  const double          n    = static_cast<double>(diff.size());
  Var out = push(Eigen::MatrixXd::Constant(1, 1, diff.cwiseAbs().sum() / n), needs(pred));
  if (needs(out)) {
    nodes_.back().backward = [this, pred, diff, n, out] {
      accumulate(pred, diff.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }) * (gradRef(out)(0, 0) / n));
    };
  }
  return out;
}

Var Tape::bceWithLogits(Var logits, const Eigen::MatrixXd& target) {
  const auto& z = value(logits);
  requireShape(z.rows() == target.rows() && z.cols() == target.cols() && target.size() > 0, "bceWithLogits");
  const double n     = static_cast<double>(z.size());
  double       total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double y = target.data()[i];
    const double x = z.data()[i];
    total -= y * logSigmoid(x) + (1.0 - y) * logSigmoid(-x);
  }
  Var out = push(Eigen::MatrixXd::Constant(1, 1, total / n), needs(logits));
  if (needs(out)) {
    nodes_.back().backward = [this, logits, target, n, out] {
      const auto      sig = value(logits).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
      accumulate(logits, (sig - target) * (gradRef(out)(0, 0) / n));
    };
  }
  return out;
}

Var Tape::cosineMatrix(Var a, Var b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  requireShape(va.cols() == vb.cols(), "cosineMatrix");
  constexpr double kEps = 1e-12;
  Eigen::VectorXd  na   = va.rowwise().norm().cwiseMax(kEps);
  Eigen::VectorXd  nb   = vb.rowwise().norm().cwiseMax(kEps);
  Eigen::MatrixXd  ua   = na.cwiseInverse().asDiagonal() * va;
  Eigen::MatrixXd  ub   = nb.cwiseInverse().asDiagonal() * vb;
  Var out = push(ua * ub.transpose(), needs(a) || needs(b));
  if (needs(out)) {
    nodes_.back().backward = [this, a, b, ua, ub, na, nb, out] {
      const auto& g = gradRef(out);
      // d(u)/d(x) for u = x / |x| is (I - u u^T) / |x|.
      const Eigen::MatrixXd gua = g * ub;
      const Eigen::MatrixXd gub = g.transpose() * ua;
      if (needs(a)) {
        Eigen::MatrixXd ga = gua - (gua.cwiseProduct(ua).rowwise().sum()).asDiagonal() * ua;
        accumulate(a, na.cwiseInverse().asDiagonal() * ga);
      }
      if (needs(b)) {
        Eigen::MatrixXd gb = gub - (gub.cwiseProduct(ub).rowwise().sum()).asDiagonal() * ub;
        accumulate(b, nb.cwiseInverse().asDiagonal() * gb);
      }
    };
  }
  return out;
}

Var Tape::diagonalCrossEntropy(Var logits, bool overColumns) {
  const Eigen::MatrixXd z = overColumns ? Eigen::MatrixXd(value(logits).transpose()) : value(logits);
  requireShape(z.rows() == z.cols() && z.rows() > 0, "diagonalCrossEntropy");
  const Eigen::Index n = z.rows();
  Eigen::MatrixXd    p(n, n);
  double             total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double    mx  = z.row(i).maxCoeff();
    Eigen::RowVectorXd e = (z.row(i).array() - mx).exp().matrix();
    const double    sum = e.sum();
    p.row(i)            = e / sum;
    total += -(z(i, i) - mx - std::log(sum));
  }
  Var out = push(Eigen::MatrixXd::Constant(1, 1, total / static_cast<double>(n)), needs(logits));
  if (needs(out)) {
    nodes_.back().backward = [this, logits, p, n, overColumns, out] {
      Eigen::MatrixXd g = p;
      g.diagonal().array() -= 1.0;
      g *= gradRef(out)(0, 0) / static_cast<double>(n);
      accumulate(logits, overColumns ? Eigen::MatrixXd(g.transpose()) : g);
    };
  }
  return out;
}

}  // namespace vscreen::ad
