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

#include "vscreen/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "adam.hpp"
#include "vscreen/autodiff.hpp"
#include "vscreen/binary_io.hpp"
#include "vscreen/errors.hpp"

namespace vscreen {

using ad::Tape;
using ad::Var;
using detail::TensorMap;

// ---------------------------------------------------------------------------
// Schedule

NoiseSchedule NoiseSchedule::linear(int steps, double beta1, double betaT) {
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "schedule needs at least one step");
  if (!(beta1 > 0.0 && beta1 <= betaT && betaT < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "linear schedule needs 0 < beta1 <= betaT < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    betas[static_cast<std::size_t>(t)] = steps == 1 ? beta1 : beta1 + (betaT - beta1) * t / static_cast<double>(steps - 1);
  }
  return fromBetas(std::move(betas));
}

NoiseSchedule NoiseSchedule::fromBetas(std::vector<double> betas) {
  if (betas.empty()) throw Error(ErrorCode::InvalidArgument, "schedule needs at least one step");
  NoiseSchedule s;
  s.alphaBars_.push_back(1.0);
  for (double b : betas) {
    if (!(b >= 0.0 && b <= 1.0)) throw Error(ErrorCode::InvalidArgument, "betas must lie in [0, 1]");
    s.alphaBars_.push_back(s.alphaBars_.back() * (1.0 - b));
  }
  s.betas_ = std::move(betas);
  return s;
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > steps()) throw Error(ErrorCode::BadStep, "step " + std::to_string(t) + " outside 1.." + std::to_string(steps()));
  return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alphaBar(int t) const {
  if (t < 0 || t > steps()) throw Error(ErrorCode::BadStep, "step " + std::to_string(t) + " outside 0.." + std::to_string(steps()));
  return alphaBars_[static_cast<std::size_t>(t)];
}

Eigen::RowVector3d NoiseSchedule::timeFeatures(int t) const {
  const double ab = alphaBar(t);
  return {std::sqrt(ab), std::sqrt(1.0 - ab), static_cast<double>(t) / steps()};
}

// ---------------------------------------------------------------------------
// States

DiffusionState DiffusionState::fromTensors(const GraphTensors& tensors, int nodes) {
  const auto n = static_cast<int>(tensors.X.rows());
  if (tensors.A.rows() != n || tensors.A.cols() != n) throw Error(ErrorCode::ShapeMismatch, "A must be n x n");
  if (nodes == 0) nodes = n;
  if (nodes < n) throw Error(ErrorCode::TooManyAtoms, std::to_string(n) + " atoms exceed the padded size " + std::to_string(nodes));
  DiffusionState s;
  s.X = Eigen::MatrixXd::Zero(nodes, tensors.X.cols());
  s.A = Eigen::MatrixXd::Zero(nodes, nodes);
  s.X.topRows(n)          = tensors.X;
  s.A.topLeftCorner(n, n) = tensors.A;
  s.mask.assign(static_cast<std::size_t>(nodes), false);
  std::fill(s.mask.begin(), s.mask.begin() + n, true);
  return s;
}

std::vector<int> DiffusionState::activeNodes() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

void DiffusionState::validate() const {
  const auto n = X.rows();
  if (A.rows() != n || A.cols() != n || mask.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::ShapeMismatch, "state shapes disagree");
  }
  if (!X.allFinite() || !A.allFinite()) throw Error(ErrorCode::ShapeMismatch, "state has non-finite entries");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (A(i, i) != 0.0) throw Error(ErrorCode::ShapeMismatch, "A diagonal must be zero");
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (A(i, j) != A(j, i)) throw Error(ErrorCode::ShapeMismatch, "A must be symmetric");
    }
    if (!mask[static_cast<std::size_t>(i)] && (X.row(i).any() || A.row(i).any())) {
      throw Error(ErrorCode::ShapeMismatch, "padding rows must be zero");
    }
  }
}

namespace {

void drawNoise(std::mt19937_64& rng, const std::vector<int>& active, Eigen::MatrixXd& epsX, Eigen::MatrixXd& epsA) {
  std::normal_distribution<double> normal;
  for (int i : active) {
    for (Eigen::Index j = 0; j < epsX.cols(); ++j) epsX(i, j) = normal(rng);
  }
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t b = a + 1; b < active.size(); ++b) {
      const double z                 = normal(rng);
      epsA(active[a], active[b]) = z;
      epsA(active[b], active[a]) = z;
    }
  }
}

}  // namespace

NoisedState forwardNoise(const DiffusionState& x0, int t, const NoiseSchedule& schedule, uint64_t seed) {
  if (t < 1 || t > schedule.steps()) {
    throw Error(ErrorCode::BadStep, "step " + std::to_string(t) + " outside 1.." + std::to_string(schedule.steps()));
  }
  x0.validate();
  NoisedState out;
  out.epsX = Eigen::MatrixXd::Zero(x0.X.rows(), x0.X.cols());
  out.epsA = Eigen::MatrixXd::Zero(x0.A.rows(), x0.A.cols());
  std::mt19937_64 rng(seed);
  drawNoise(rng, x0.activeNodes(), out.epsX, out.epsA);
  const double a = std::sqrt(schedule.alphaBar(t));
  const double s = std::sqrt(1.0 - schedule.alphaBar(t));
  out.state      = x0;
  out.state.t    = t;
  out.state.X    = a * x0.X + s * out.epsX;
  out.state.A    = a * x0.A + s * out.epsA;
  return out;
}

// ---------------------------------------------------------------------------
// Networks

namespace {

struct Spec {
  std::string name;
  int         rows;
  int         cols;
  int         fanIn;
};

constexpr int kTimeDim = 3;

void addDense(std::vector<Spec>& s, const std::string& name, int in, int out) {
  s.push_back({name + ".W", in, out, in});
  s.push_back({name + ".b", 1, out, in});
}

std::vector<Spec> trunkSpecs(int nodeDim, int hidden, int layers, int condDim) {
  std::vector<Spec> s;
  addDense(s, "in", nodeDim + 1 + kTimeDim + condDim, hidden);
  for (int l = 0; l < layers; ++l) addDense(s, "gnn" + std::to_string(l), 2 * hidden, hidden);
  return s;
}

std::vector<Spec> scoreSpecs(const ScoreConfig& c) {
  auto s = trunkSpecs(c.nodeDim, c.hidden, c.layers, c.condDim);
  addDense(s, "outx", c.hidden + kTimeDim, c.nodeDim);
  addDense(s, "skipx", kTimeDim, 1);
  addDense(s, "pair1", 2 * c.hidden + 1 + kTimeDim, c.hidden);
  addDense(s, "pair2", c.hidden, 1);
  addDense(s, "skipa", kTimeDim, 1);
  return s;
}

std::vector<Spec> controllerSpecs(const ControllerConfig& c) {
  auto s = trunkSpecs(c.nodeDim, c.hidden, c.layers, 0);
  addDense(s, "r1", c.hidden + kTimeDim, c.hidden);
  addDense(s, "r2", c.hidden, 1);
  return s;
}

TensorMap initTensors(const std::vector<Spec>& specs, uint64_t seed) {
  TensorMap       out;
  std::mt19937_64 rng(seed);
  for (const auto& s : specs) {
    const double                           bound = 1.0 / std::sqrt(static_cast<double>(s.fanIn));
    std::uniform_real_distribution<double> u(-bound, bound);
    Eigen::MatrixXd                        m(s.rows, s.cols);
    for (int i = 0; i < s.rows; ++i) {
      for (int j = 0; j < s.cols; ++j) m(i, j) = u(rng);
    }
    out.emplace(s.name, std::move(m));
  }
  return out;
}

void checkTensors(const TensorMap& tensors, const std::vector<Spec>& specs) {
  if (tensors.size() != specs.size()) throw Error(ErrorCode::ShapeMismatch, "unexpected parameter set");
  for (const auto& s : specs) {
    auto it = tensors.find(s.name);
    if (it == tensors.end() || it->second.rows() != s.rows || it->second.cols() != s.cols) {
      throw Error(ErrorCode::ShapeMismatch, "parameter " + s.name + " is missing or misshapen");
    }
  }
}

class Params {
 public:
  Params(Tape& tape, const TensorMap& tensors, bool trainable) : tape_(tape) {
    for (const auto& [name, value] : tensors) vars_.emplace(name, trainable ? tape.param(value) : tape.constant(value));
  }
  Var  operator[](const std::string& name) const { return vars_.at(name); }
  Var  dense(const std::string& name, Var x) const { return tape_.addRow(tape_.matmul(x, (*this)[name + ".W"]), (*this)[name + ".b"]); }
  void collect(TensorMap& grads) const {
    for (const auto& [name, v] : vars_) {
      auto g = tape_.grad(v);
      auto it = grads.find(name);
      if (it == grads.end()) {
        grads.emplace(name, std::move(g));
      } else {
        it->second += g;
      }
    }
  }

 private:
  Tape&                      tape_;
  std::map<std::string, Var> vars_;
};

//! Active sub-block of a state.
struct Block {
  std::vector<int> nodes;
  Eigen::MatrixXd  X;
  Eigen::MatrixXd  A;
};

Block activeBlock(const DiffusionState& s) {
  Block b;
  b.nodes      = s.activeNodes();
  const auto k = static_cast<Eigen::Index>(b.nodes.size());
  if (k == 0) throw Error(ErrorCode::ShapeMismatch, "state has no active nodes");
  b.X.resize(k, s.X.cols());
  b.A.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    b.X.row(i) = s.X.row(b.nodes[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < k; ++j) b.A(i, j) = s.A(b.nodes[static_cast<std::size_t>(i)], b.nodes[static_cast<std::size_t>(j)]);
  }
  return b;
}

Eigen::MatrixXd repeatRow(const Eigen::RowVectorXd& row, Eigen::Index n) { return row.replicate(n, 1); }

Var trunk(Tape& t, const Params& p, int layers, Var X, Var A, const Eigen::RowVector3d& time, const Eigen::VectorXd* cond) {
  const auto k      = t.value(X).rows();
  Var        degree = t.matmul(A, t.constant(Eigen::MatrixXd::Ones(k, 1)));
  std::vector<Var> in{X, degree, t.constant(repeatRow(time, k))};
  if (cond != nullptr) in.push_back(t.constant(repeatRow(cond->transpose(), k)));
  Var h = t.relu(p.dense("in", t.concatCols(in)));
  for (int l = 0; l < layers; ++l) {
    const Var parts[2] = {h, t.matmul(A, h)};
    h                  = t.relu(p.dense("gnn" + std::to_string(l), t.concatCols(parts)));
  }
  return h;
}

struct PairIndex {
  std::vector<int> i;
  std::vector<int> j;
};

PairIndex upperPairs(int k) {
  PairIndex p;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      p.i.push_back(a);
      p.j.push_back(b);
    }
  }
  return p;
}

struct ScoreOut {
  Var       epsX;
  Var       epsPairs;  //!< P x 1 in upperPairs order; id -1 when P = 0
  PairIndex pairs;
};

ScoreOut scoreForward(Tape& t, const Params& p, const ScoreConfig& c, const Block& b, const Eigen::RowVector3d& time,
                      const Eigen::VectorXd* cond) {
  const auto k = static_cast<int>(b.X.rows());
  Var        X = t.constant(b.X);
  Var        A = t.constant(b.A);
  Var        h = trunk(t, p, c.layers, X, A, time, cond);
  Var        tr = t.constant(time);
  ScoreOut   out;
  const Var  xParts[2] = {h, t.constant(repeatRow(time, k))};
  out.epsX             = t.add(p.dense("outx", t.concatCols(xParts)), t.scaleBy(X, p.dense("skipx", tr)));
  out.pairs            = upperPairs(k);
  const auto np        = static_cast<Eigen::Index>(out.pairs.i.size());
  if (np == 0) return out;
  Eigen::MatrixXd aij(np, 1);
  for (Eigen::Index q = 0; q < np; ++q) aij(q, 0) = b.A(out.pairs.i[static_cast<std::size_t>(q)], out.pairs.j[static_cast<std::size_t>(q)]);
  Var       hi       = t.gatherRows(h, out.pairs.i);
  Var       hj       = t.gatherRows(h, out.pairs.j);
  Var       a        = t.constant(aij);
  const Var parts[4] = {t.add(hi, hj), t.mul(hi, hj), a, t.constant(repeatRow(time, np))};
  Var       mlp      = p.dense("pair2", t.relu(p.dense("pair1", t.concatCols(parts))));
  out.epsPairs       = t.add(mlp, t.scaleBy(a, p.dense("skipa", tr)));
  return out;
}

Var controllerForward(Tape& t, const Params& p, const ControllerConfig& c, Var X, Var A, const Eigen::RowVector3d& time) {
  const auto k       = t.value(X).rows();
  Var        h       = trunk(t, p, c.layers, X, A, time, nullptr);
  const Var  parts[2] = {t.segmentMean(h, std::vector<int>(static_cast<std::size_t>(k), 0), 1), t.constant(time)};
  return p.dense("r2", t.relu(p.dense("r1", t.concatCols(parts))));
}

void checkCond(const ScoreConfig& c, const Eigen::VectorXd* cond) {
  const int got = cond == nullptr ? 0 : static_cast<int>(cond->size());
  if (got != c.condDim) {
    throw Error(ErrorCode::ShapeMismatch, "condition vector has " + std::to_string(got) + " entries, model expects " + std::to_string(c.condDim));
  }
}

void checkNodeDim(int expected, const DiffusionState& s) {
  if (s.X.cols() != expected) {
    throw Error(ErrorCode::ShapeMismatch, "state has " + std::to_string(s.X.cols()) + " node features, model expects " + std::to_string(expected));
  }
}

}  // namespace

void ScoreConfig::validate() const {
  if (nodeDim < 1 || hidden < 1 || layers < 0 || condDim < 0) throw Error(ErrorCode::InvalidArgument, "invalid score model configuration");
}

void ControllerConfig::validate() const {
  if (nodeDim < 1 || hidden < 1 || layers < 0) throw Error(ErrorCode::InvalidArgument, "invalid controller configuration");
}

ScoreModel initScoreModel(const ScoreConfig& config, uint64_t seed) {
  config.validate();
  return {config, initTensors(scoreSpecs(config), seed), false};
}

Controller initController(const ControllerConfig& config, uint64_t seed) {
  config.validate();
  return {config, initTensors(controllerSpecs(config), seed), false};
}

StatePair predictNoise(const ScoreModel& model, const DiffusionState& xt, const NoiseSchedule& schedule, const Eigen::VectorXd* cond) {
  checkTensors(model.tensors, scoreSpecs(model.config));
  checkNodeDim(model.config.nodeDim, xt);
  checkCond(model.config, cond);
  const Block b = activeBlock(xt);
  Tape        t;
  Params      p(t, model.tensors, false);
  const auto  out = scoreForward(t, p, model.config, b, schedule.timeFeatures(xt.t), cond);
  StatePair   r{Eigen::MatrixXd::Zero(xt.X.rows(), xt.X.cols()), Eigen::MatrixXd::Zero(xt.A.rows(), xt.A.cols())};
  const auto& ex = t.value(out.epsX);
  for (std::size_t i = 0; i < b.nodes.size(); ++i) r.X.row(b.nodes[i]) = ex.row(static_cast<Eigen::Index>(i));
  if (out.pairs.i.empty()) return r;
  const auto& ea = t.value(out.epsPairs);
  for (std::size_t q = 0; q < out.pairs.i.size(); ++q) {
    const int a                            = b.nodes[static_cast<std::size_t>(out.pairs.i[q])];
    const int c                            = b.nodes[static_cast<std::size_t>(out.pairs.j[q])];
    r.A(a, c)                              = ea(static_cast<Eigen::Index>(q), 0);
    r.A(c, a)                              = r.A(a, c);
  }
  return r;
}

ScoreTrainResult trainScore(std::span<const DiffusionState> data, const NoiseSchedule& schedule, const ScoreConfig& config,
                            const TrainConfig& train, std::span<const Eigen::VectorXd> conds) {
  train.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no training graphs");
  if (!conds.empty() && conds.size() != data.size()) throw Error(ErrorCode::ShapeMismatch, "one condition vector per graph is required");
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i].validate();
    checkNodeDim(config.nodeDim, data[i]);
    checkCond(config, conds.empty() ? nullptr : &conds[i]);
    if (data[i].activeNodes().empty()) throw Error(ErrorCode::ShapeMismatch, "graph " + std::to_string(i) + " has no active nodes");
  }
  ScoreTrainResult result{initScoreModel(config, train.seed), {}};
  std::mt19937_64  rng(detail::mixSeed(train.seed, 0));
  const std::size_t bs       = static_cast<std::size_t>(train.batchSize);
  const std::size_t perEpoch = (data.size() + bs - 1) / bs;
  detail::Adam      adam(result.model.tensors, train.lr, static_cast<long>(perEpoch) * train.epochs, train.cosineDecay);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uniform_int_distribution<int> pickStep(1, schedule.steps());

  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    detail::shuffleIndices(order, rng);
    double lossSum = 0.0;
    int    batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += bs) {
      const std::size_t end = std::min(order.size(), begin + bs);
      TensorMap         grads;
      double            batchLoss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t idx   = order[k];
        const int         step  = pickStep(rng);
        const auto        noisy = forwardNoise(data[idx], step, schedule, rng());
        const Block       b     = activeBlock(noisy.state);
        Tape              t;
        Params            p(t, result.model.tensors, true);
        const auto*       cond = conds.empty() ? nullptr : &conds[idx];
        const auto        out  = scoreForward(t, p, config, b, schedule.timeFeatures(step), cond);

        Eigen::MatrixXd targetX(b.X.rows(), b.X.cols());
        for (std::size_t i = 0; i < b.nodes.size(); ++i) targetX.row(static_cast<Eigen::Index>(i)) = noisy.epsX.row(b.nodes[i]);
        const double nx   = static_cast<double>(targetX.size());
        const double np   = static_cast<double>(out.pairs.i.size());
        Var          loss = t.scale(t.mseLoss(out.epsX, targetX), nx / (nx + np));
        if (np > 0) {
          Eigen::MatrixXd targetA(out.pairs.i.size(), 1);
          for (std::size_t q = 0; q < out.pairs.i.size(); ++q) {
            targetA(static_cast<Eigen::Index>(q), 0) = noisy.epsA(b.nodes[static_cast<std::size_t>(out.pairs.i[q])],
                                                                  b.nodes[static_cast<std::size_t>(out.pairs.j[q])]);
          }
          loss = t.add(loss, t.scale(t.mseLoss(out.epsPairs, targetA), np / (nx + np)));
        }
        t.backward(loss);
        p.collect(grads);
        batchLoss += t.value(loss)(0, 0);
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (auto& [name, g] : grads) g *= inv;
      adam.step(result.model.tensors, grads);
      lossSum += batchLoss * inv;
      ++batches;
    }
    result.lossTrace.push_back(lossSum / batches);
  }
  result.model.trained = true;
  return result;
}

ControllerOutput controllerEval(const Controller& controller, const DiffusionState& state, const NoiseSchedule& schedule) {
  checkTensors(controller.tensors, controllerSpecs(controller.config));
  checkNodeDim(controller.config.nodeDim, state);
  const Block b = activeBlock(state);
  Tape        t;
  Params      p(t, controller.tensors, false);
  Var         X = t.param(b.X);
  Var         A = t.param(b.A);
  Var         v = controllerForward(t, p, controller.config, X, A, schedule.timeFeatures(state.t));
  t.backward(v);
  ControllerOutput out;
  out.value   = t.value(v)(0, 0);
  out.grad.X  = Eigen::MatrixXd::Zero(state.X.rows(), state.X.cols());
  out.grad.A  = Eigen::MatrixXd::Zero(state.A.rows(), state.A.cols());
  const auto gx = t.grad(X);
  const auto ga = t.grad(A);
  for (std::size_t i = 0; i < b.nodes.size(); ++i) {
    out.grad.X.row(b.nodes[i]) = gx.row(static_cast<Eigen::Index>(i));
    for (std::size_t j = i + 1; j < b.nodes.size(); ++j) {
      const auto   ii = static_cast<Eigen::Index>(i);
      const auto   jj = static_cast<Eigen::Index>(j);
      const double g  = ga(ii, jj) + ga(jj, ii);
      out.grad.A(b.nodes[i], b.nodes[j]) = g;
      out.grad.A(b.nodes[j], b.nodes[i]) = g;
    }
  }
  return out;
}

double controllerScore(const Controller& controller, const Molecule& mol, const NoiseSchedule& schedule) {
  auto state = DiffusionState::fromTensors(toTensors(mol));
  state.t    = 0;
  checkTensors(controller.tensors, controllerSpecs(controller.config));
  checkNodeDim(controller.config.nodeDim, state);
  const Block b = activeBlock(state);
  Tape        t;
  Params      p(t, controller.tensors, false);
  return t.value(controllerForward(t, p, controller.config, t.constant(b.X), t.constant(b.A), schedule.timeFeatures(0)))(0, 0);
}

ControllerTrainResult trainController(std::span<const DiffusionState> data, std::span<const double> targets,
                                      const NoiseSchedule& schedule, const ControllerConfig& config, const TrainConfig& train) {
  train.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no training graphs");
  if (targets.size() != data.size()) throw Error(ErrorCode::ShapeMismatch, "one target per graph is required");
  for (const auto& s : data) {
    s.validate();
    checkNodeDim(config.nodeDim, s);
  }
  ControllerTrainResult result{initController(config, train.seed), {}};
  std::mt19937_64       rng(detail::mixSeed(train.seed, 1));
  const std::size_t     bs       = static_cast<std::size_t>(train.batchSize);
  const std::size_t     perEpoch = (data.size() + bs - 1) / bs;
  detail::Adam          adam(result.controller.tensors, train.lr, static_cast<long>(perEpoch) * train.epochs, train.cosineDecay);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uniform_int_distribution<int> pickStep(0, schedule.steps());

  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    detail::shuffleIndices(order, rng);
    double lossSum = 0.0;
    int    batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += bs) {
      const std::size_t end = std::min(order.size(), begin + bs);
      TensorMap         grads;
      double            batchLoss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t idx  = order[k];
        const int         step = pickStep(rng);
        const uint64_t    s    = rng();
        DiffusionState    x    = data[idx];
        x.t                    = 0;
        if (step > 0) x = forwardNoise(data[idx], step, schedule, s).state;
        const Block b = activeBlock(x);
        Tape        t;
        Params      p(t, result.controller.tensors, true);
        Var v    = controllerForward(t, p, config, t.constant(b.X), t.constant(b.A), schedule.timeFeatures(step));
        Var loss = t.mseLoss(v, Eigen::MatrixXd::Constant(1, 1, targets[idx]));
        t.backward(loss);
        p.collect(grads);
        batchLoss += t.value(loss)(0, 0);
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (auto& [name, g] : grads) g *= inv;
      adam.step(result.controller.tensors, grads);
      lossSum += batchLoss * inv;
      ++batches;
    }
    result.lossTrace.push_back(lossSum / batches);
  }
  result.controller.trained = true;
  return result;
}

// ---------------------------------------------------------------------------
// Sampling

ScoreFn modelScore(const ScoreModel& model, const NoiseSchedule& schedule, const Controller* controller, double lambda,
                   const Eigen::VectorXd* cond) {
  if (!model.trained) throw Error(ErrorCode::UntrainedModel, "score model was never trained");
  if (controller != nullptr && !controller->trained) throw Error(ErrorCode::UntrainedModel, "controller was never trained");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "guidance scale must be non-negative");
  checkCond(model.config, cond);
  return [&model, &schedule, controller, lambda, cond](const DiffusionState& s) {
    StatePair    eps   = predictNoise(model, s, schedule, cond);
    const double sigma = std::sqrt(1.0 - schedule.alphaBar(s.t));
    StatePair    score{Eigen::MatrixXd::Zero(s.X.rows(), s.X.cols()), Eigen::MatrixXd::Zero(s.A.rows(), s.A.cols())};
    if (sigma > 0.0) {
      score.X = -eps.X / sigma;
      score.A = -eps.A / sigma;
    }
    if (controller != nullptr && lambda != 0.0) {
      const auto g = controllerEval(*controller, s, schedule);
      score.X += lambda * g.grad.X;
      score.A += lambda * g.grad.A;
    }
    return score;
  };
}

namespace {

using StepHook = std::function<void(DiffusionState&)>;

SampleResult runSampler(const ScoreFn& score, const NoiseSchedule& schedule, int nodes, int nodeDim, uint64_t seed, bool keep,
                        const StepHook& hook) {
  if (nodes < 1) throw Error(ErrorCode::InvalidArgument, "need at least one node");
  if (nodeDim < 1) throw Error(ErrorCode::InvalidArgument, "need at least one node feature");
  std::mt19937_64                  rng(seed);
  std::normal_distribution<double> normal;
  DiffusionState                   s;
  s.X = Eigen::MatrixXd::Zero(nodes, nodeDim);
  s.A = Eigen::MatrixXd::Zero(nodes, nodes);
  s.mask.assign(static_cast<std::size_t>(nodes), true);
  s.t = schedule.steps();
  std::vector<int> all(static_cast<std::size_t>(nodes));
  std::iota(all.begin(), all.end(), 0);
  drawNoise(rng, all, s.X, s.A);
  if (hook) hook(s);

  SampleResult r;
  if (keep) r.trajectory.push_back(s);
  Eigen::MatrixXd zX = Eigen::MatrixXd::Zero(nodes, nodeDim);
  Eigen::MatrixXd zA = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int t = schedule.steps(); t >= 1; --t) {
    s.t                    = t;
    const StatePair sc     = score(s);
    const double    beta   = schedule.beta(t);
    const double    g      = std::sqrt(beta);
    const bool      noisy  = t > 1;
    if (noisy) drawNoise(rng, all, zX, zA);
    s.X = s.X + beta * (0.5 * s.X + sc.X);
    if (noisy) s.X += g * zX;
    for (int i = 0; i < nodes; ++i) {
      for (int j = i + 1; j < nodes; ++j) {
        double a = s.A(i, j) + beta * (0.5 * s.A(i, j) + sc.A(i, j));
        if (noisy) a += g * zA(i, j);
        s.A(i, j) = a;
        s.A(j, i) = a;
      }
    }
    s.t = t - 1;
    if (hook) hook(s);
    if (keep) r.trajectory.push_back(s);
  }
  r.final = std::move(s);
  return r;
}

}  // namespace

SampleResult sampleSde(const ScoreFn& score, const NoiseSchedule& schedule, int nodes, int nodeDim, uint64_t seed, bool keepTrajectory) {
  return runSampler(score, schedule, nodes, nodeDim, seed, keepTrajectory, nullptr);
}

SampleResult reverseSample(const ScoreModel& model, const NoiseSchedule& schedule, int nodes, const Controller* controller,
                           double lambda, uint64_t seed, bool keepTrajectory, const Eigen::VectorXd* cond) {
  const auto fn = modelScore(model, schedule, controller, lambda, cond);
  return runSampler(fn, schedule, nodes, model.config.nodeDim, seed, keepTrajectory, nullptr);
}

InpaintMask InpaintMask::fromNodes(std::vector<bool> nodes) {
  InpaintMask m;
  const auto  n = static_cast<Eigen::Index>(nodes.size());
  m.edges       = BoolMatrix::Constant(n, n, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) m.edges(i, j) = nodes[static_cast<std::size_t>(i)] || nodes[static_cast<std::size_t>(j)];
    }
  }
  m.nodes = std::move(nodes);
  return m;
}

SampleResult inpaintSde(const ScoreFn& score, const NoiseSchedule& schedule, const GraphTensors& templ, const InpaintMask& mask,
                        uint64_t seed, bool keepTrajectory) {
  const auto n = templ.X.rows();
  if (templ.A.rows() != n || templ.A.cols() != n) throw Error(ErrorCode::ShapeMismatch, "template A must be n x n");
  if (mask.nodes.size() != static_cast<std::size_t>(n) || mask.edges.rows() != n || mask.edges.cols() != n) {
    throw Error(ErrorCode::MaskShapeMismatch, "mask must cover " + std::to_string(n) + " nodes");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (mask.edges(i, j) != mask.edges(j, i)) throw Error(ErrorCode::MaskShapeMismatch, "edge mask must be symmetric");
    }
  }
  const DiffusionState x0 = DiffusionState::fromTensors(templ);
  x0.validate();
  std::mt19937_64 fill(detail::mixSeed(seed, 0x1A7));
  const StepHook  replace = [&](DiffusionState& s) {
    if (s.t == 0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!mask.nodes[static_cast<std::size_t>(i)]) s.X.row(i) = x0.X.row(i);
        for (Eigen::Index j = 0; j < n; ++j) {
          if (i != j && !mask.edges(i, j)) s.A(i, j) = x0.A(i, j);
        }
      }
      return;
    }
    const auto noised = forwardNoise(x0, s.t, schedule, fill());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!mask.nodes[static_cast<std::size_t>(i)]) s.X.row(i) = noised.state.X.row(i);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j && !mask.edges(i, j)) s.A(i, j) = noised.state.A(i, j);
      }
    }
  };
  return runSampler(score, schedule, static_cast<int>(n), static_cast<int>(templ.X.cols()), seed, keepTrajectory, replace);
}

SampleResult inpaintSample(const ScoreModel& model, const NoiseSchedule& schedule, const GraphTensors& templ, const InpaintMask& mask,
                           const Controller* controller, double lambda, uint64_t seed) {
  if (templ.X.cols() != model.config.nodeDim) throw Error(ErrorCode::ShapeMismatch, "template feature width differs from the model");
  const auto fn = modelScore(model, schedule, controller, lambda, nullptr);
  return inpaintSde(fn, schedule, templ, mask, seed, false);
}

// ---------------------------------------------------------------------------
// Discretization

std::string_view rejectReasonName(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "none";
    case RejectReason::Empty: return "empty";
    case RejectReason::ValenceUnrepairable: return "valence_unrepairable";
    case RejectReason::Invalid: return "invalid";
  }
  return "invalid";
}

void RejectionStats::add(RejectReason r) {
  ++counts[r];
  ++total;
}

int RejectionStats::rejected() const {
  int n = 0;
  for (const auto& [r, c] : counts) {
    if (r != RejectReason::None) n += c;
  }
  return n;
}

namespace {

bool aromaticCapable(Element e) {
  return e == Element::C || e == Element::N || e == Element::O || e == Element::S || e == Element::P;
}

struct DraftBond {
  int    a;
  int    b;
  int    order;  //!< 1..3, or 4 for aromatic
  double strength;
  bool   locked;
};

int valenceOf(int order) { return order == 4 ? 1 : order; }

}  // namespace

QuantizeResult quantizeGraph(const DiffusionState& state, const BoolMatrix* locked) {
  QuantizeResult r;
  const auto     active = state.activeNodes();
  if (state.X.cols() != static_cast<Eigen::Index>(kAtomFeatureDim) || state.A.rows() != state.X.rows() ||
      state.A.cols() != state.X.rows() || !state.X.allFinite() || !state.A.allFinite()) {
    r.reason = RejectReason::Invalid;
    r.detail = "state shape or values unusable";
    return r;
  }
  if (active.empty()) {
    r.reason = RejectReason::Empty;
    r.detail = "no active nodes";
    return r;
  }
  const int         k = static_cast<int>(active.size());
  std::vector<Atom> atoms(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto   row = state.X.row(active[static_cast<std::size_t>(i)]);
    Eigen::Index best = 0;
    row.head(kNumElements).maxCoeff(&best);
    auto& atom    = atoms[static_cast<std::size_t>(i)];
    atom.element  = static_cast<Element>(best);
    atom.charge   = static_cast<int>(std::clamp(std::lround(row(kNumElements)), -1L, 1L));
    atom.aromatic = row(kNumElements + 1) > 0.5 && aromaticCapable(atom.element);
  }

  std::vector<DraftBond> bonds;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const int    gi = active[static_cast<std::size_t>(i)];
      const int    gj = active[static_cast<std::size_t>(j)];
      const double v  = state.A(gi, gj);
      int          order = 0;
      if (atoms[static_cast<std::size_t>(i)].aromatic && atoms[static_cast<std::size_t>(j)].aromatic && v >= 1.25 && v < 1.75) {
        order = 4;
      } else if (v >= 2.5) {
        order = 3;
      } else if (v >= 1.5) {
        order = 2;
      } else if (v >= 0.5) {
        order = 1;
      }
      if (order > 0) bonds.push_back({i, j, order, v, locked != nullptr && (*locked)(gi, gj)});
    }
  }

  auto used = [&](int atom) {
    int u = 0;
    for (const auto& b : bonds) {
      if (b.order > 0 && (b.a == atom || b.b == atom)) u += valenceOf(b.order);
    }
    return u;
  };
  for (;;) {
    int over = -1;
    for (int i = 0; i < k && over < 0; ++i) {
      const auto& atom = atoms[static_cast<std::size_t>(i)];
      if (used(i) > maxValence(atom.element, atom.charge)) over = i;
    }
    if (over < 0) break;
    DraftBond* weakest = nullptr;
    for (auto& b : bonds) {
      if (b.order == 0 || b.locked || (b.a != over && b.b != over)) continue;
      if (weakest == nullptr || b.strength < weakest->strength) weakest = &b;
    }
    if (weakest == nullptr) {
      r.reason = RejectReason::ValenceUnrepairable;
      r.detail = "atom " + std::to_string(active[static_cast<std::size_t>(over)]) + " stays over-valent with only locked bonds";
      return r;
    }
    weakest->order = weakest->order == 4 ? 0 : weakest->order - 1;
  }

  std::vector<bool> hasAromaticBond(static_cast<std::size_t>(k), false);
  for (const auto& b : bonds) {
    if (b.order == 4) hasAromaticBond[static_cast<std::size_t>(b.a)] = hasAromaticBond[static_cast<std::size_t>(b.b)] = true;
  }
  MoleculeBuilder  builder;
  std::vector<int> all;
  for (int i = 0; i < k; ++i) {
    Atom atom = atoms[static_cast<std::size_t>(i)];
    if (!hasAromaticBond[static_cast<std::size_t>(i)]) atom.aromatic = false;
    all.push_back(builder.addAtom(atom));
  }
  for (const auto& b : bonds) {
    if (b.order == 0) continue;
    builder.addBond(b.a, b.b, b.order == 4 ? BondOrder::Aromatic : static_cast<BondOrder>(b.order));
  }
  builder.assignDefaultHydrogens(all);
  try {
    r.molecule = builder.build();
  } catch (const Error& e) {
    r.reason = RejectReason::Invalid;
    r.detail = e.what();
  }
  return r;
}

GeneratedBatch generateMolecules(const ScoreModel& model, const NoiseSchedule& schedule, std::span<const int> sizes,
                                 const Controller* controller, double lambda, uint64_t seed) {
  GeneratedBatch batch;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const auto sample = reverseSample(model, schedule, sizes[k], controller, lambda, detail::mixSeed(seed, k));
    auto       q      = quantizeGraph(sample.final);
    batch.stats.add(q.reason);
    if (q.molecule) {
      batch.molecules.push_back(std::move(*q.molecule));
    } else {
      batch.rejections.emplace_back(k, std::move(q));
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Metrics

Eigen::VectorXd graphStatistics(const Molecule& mol) {
  constexpr int   kDegreeBins = 5;
  Eigen::VectorXd v           = Eigen::VectorXd::Zero(kDegreeBins + static_cast<Eigen::Index>(kNumElements) + 1);
  const double    n           = static_cast<double>(mol.numAtoms());
  for (std::size_t i = 0; i < mol.numAtoms(); ++i) {
    v[std::min(mol.degree(i), kDegreeBins - 1)] += 1.0 / n;
    v[kDegreeBins + static_cast<Eigen::Index>(mol.atom(i).element)] += 1.0 / n;
  }
  v[v.size() - 1] = mol.numAtoms() == 0 ? 0.0 : mol.ringCount();
  return v;
}

namespace {

std::vector<Eigen::VectorXd> statistics(std::span<const Molecule> mols) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(mols.size());
  for (const auto& m : mols) out.push_back(graphStatistics(m));
  return out;
}

double medianOf(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double pooledMedian(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
  std::vector<Eigen::VectorXd> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  std::vector<double> d;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) d.push_back((pool[i] - pool[j]).norm());
  }
  const double med = d.empty() ? 0.0 : medianOf(std::move(d));
  return med > 0.0 ? med : 1.0;
}

double withinMean(const std::vector<Eigen::VectorXd>& s, double gamma) {
  if (s.size() == 1) return 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (i != j) sum += std::exp(-gamma * (s[i] - s[j]).squaredNorm());
    }
  }
  return sum / (static_cast<double>(s.size()) * static_cast<double>(s.size() - 1));
}

}  // namespace

double medianBandwidth(std::span<const Molecule> a, std::span<const Molecule> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "both molecule sets must be non-empty");
  return pooledMedian(statistics(a), statistics(b));
}

double mmdMetric(std::span<const Molecule> a, std::span<const Molecule> b, std::optional<double> bandwidth) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "both molecule sets must be non-empty");
  if (bandwidth && !(*bandwidth > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
  const auto   sa    = statistics(a);
  const auto   sb    = statistics(b);
  const double sigma = bandwidth ? *bandwidth : pooledMedian(sa, sb);
  const double gamma = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> terms;
  for (const auto& x : sa) {
    for (const auto& y : sb) terms.push_back(std::exp(-gamma * (x - y).squaredNorm()));
  }
  std::sort(terms.begin(), terms.end());
  const double cross = std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(terms.size());
  return std::max(0.0, withinMean(sa, gamma) + withinMean(sb, gamma) - 2.0 * cross);
}

OptimizeOutcome optimizeSuccess(std::span<const double> before, std::span<const double> after, SuccessPolicy policy) {
  if (before.empty() || after.empty()) throw Error(ErrorCode::EmptySet, "before and after sets must be non-empty");
  OptimizeOutcome o;
  o.meanBefore = std::accumulate(before.begin(), before.end(), 0.0) / static_cast<double>(before.size());
  o.meanAfter  = std::accumulate(after.begin(), after.end(), 0.0) / static_cast<double>(after.size());
  const double threshold = policy == SuccessPolicy::MaxOfBefore ? *std::max_element(before.begin(), before.end()) : o.meanBefore;
  o.success = std::any_of(after.begin(), after.end(), [&](double s) { return s > threshold; });
  const double diff = o.meanAfter - o.meanBefore;
  if (diff == 0.0) {
    o.improvementRate = 0.0;
  } else if (o.meanBefore == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "improvement rate is undefined when the mean score before is zero");
  } else {
    o.improvementRate = diff / std::abs(o.meanBefore);
  }
  return o;
}

OptimizeOutcome optimizeSuccess(std::span<const Molecule> before, std::span<const Molecule> after, const Controller& scorer,
                                const NoiseSchedule& schedule, SuccessPolicy policy) {
  if (!scorer.trained) throw Error(ErrorCode::UntrainedModel, "scorer was never trained");
  std::vector<double> sb;
  std::vector<double> sa;
  for (const auto& m : before) sb.push_back(controllerScore(scorer, m, schedule));
  for (const auto& m : after) sa.push_back(controllerScore(scorer, m, schedule));
  return optimizeSuccess(sb, sa, policy);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr uint32_t kNetVersion = 1;

void saveNet(const std::string& path, std::string_view magic, nlohmann::json config, std::string_view meta, bool trained,
             const TensorMap& tensors) {
  if (!meta.empty()) config["meta"] = nlohmann::json::parse(meta);
  BinaryWriter w;
  w.bytes(magic);
  w.scalar<uint32_t>(kNetVersion);
  w.str(config.dump());
  w.scalar<uint8_t>(trained ? 1 : 0);
  w.scalar<uint32_t>(static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.str(name);
    w.matrix(t);
  }
  writeFileBytes(path, w.data());
}

struct LoadedNet {
  nlohmann::json config;
  bool           trained = false;
  TensorMap      tensors;
};

LoadedNet loadNet(const std::string& path, std::string_view magic) {
  BinaryReader r(readFileBytes(path));
  if (r.bytes(magic.size()) != magic) throw Error(ErrorCode::FormatError, path + ": wrong file type");
  if (r.scalar<uint32_t>() != kNetVersion) throw Error(ErrorCode::FormatError, path + ": unsupported version");
  LoadedNet net;
  try {
    net.config = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad config block: ") + e.what());
  }
  net.trained      = r.scalar<uint8_t>() != 0;
  const auto count = r.scalar<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    net.tensors.emplace(std::move(name), r.matrix());
  }
  if (!r.atEnd()) throw Error(ErrorCode::FormatError, path + ": trailing bytes");
  return net;
}

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad config field '") + key + "': " + e.what());
  }
}

}  // namespace

void saveScoreModel(const std::string& path, const ScoreModel& model, std::string_view meta) {
  checkTensors(model.tensors, scoreSpecs(model.config));
  const auto& c = model.config;
  saveNet(path, "VSSCORE1", {{"node_dim", c.nodeDim}, {"hidden", c.hidden}, {"layers", c.layers}, {"cond_dim", c.condDim}}, meta, model.trained,
          model.tensors);
}

ScoreModel loadScoreModel(const std::string& path) {
  auto       net = loadNet(path, "VSSCORE1");
  ScoreModel m;
  m.config.nodeDim = field<int>(net.config, "node_dim");
  m.config.hidden  = field<int>(net.config, "hidden");
  m.config.layers  = field<int>(net.config, "layers");
  m.config.condDim = field<int>(net.config, "cond_dim");
  m.config.validate();
  m.trained = net.trained;
  m.tensors = std::move(net.tensors);
  try {
    checkTensors(m.tensors, scoreSpecs(m.config));
  } catch (const Error& e) {
    throw Error(ErrorCode::FormatError, e.what());
  }
  return m;
}

void saveController(const std::string& path, const Controller& controller, std::string_view meta) {
  checkTensors(controller.tensors, controllerSpecs(controller.config));
  const auto& c = controller.config;
  saveNet(path, "VSCTRL01", {{"node_dim", c.nodeDim}, {"hidden", c.hidden}, {"layers", c.layers}}, meta, controller.trained, controller.tensors);
}

Controller loadController(const std::string& path) {
  auto       net = loadNet(path, "VSCTRL01");
  Controller c;
  c.config.nodeDim = field<int>(net.config, "node_dim");
  c.config.hidden  = field<int>(net.config, "hidden");
  c.config.layers  = field<int>(net.config, "layers");
  c.config.validate();
  c.trained = net.trained;
  c.tensors = std::move(net.tensors);
  try {
    checkTensors(c.tensors, controllerSpecs(c.config));
  } catch (const Error& e) {
    throw Error(ErrorCode::FormatError, e.what());
  }
  return c;
}

}  // namespace vscreen
