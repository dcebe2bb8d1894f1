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

#include "vscreen/kg.hpp"

#include <cmath>
#include <random>

#include "vscreen/binary_io.hpp"
#include "vscreen/errors.hpp"

namespace vscreen {

namespace {

constexpr char     kTableMagic[] = "VSKGEMB1";
constexpr uint32_t kTableVersion = 1;

double distance(const Eigen::VectorXd& v, KgMetric metric) {
  return metric == KgMetric::L1 ? v.cwiseAbs().sum() : v.norm();
}

//! Subgradient of the norm at v; zero at the kink.
Eigen::VectorXd distanceGrad(const Eigen::VectorXd& v, KgMetric metric) {
  if (metric == KgMetric::L1) {
    return v.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
  }
  const double n = v.norm();
  return n > 0.0 ? Eigen::VectorXd(v / n) : Eigen::VectorXd::Zero(v.size());
}

void checkShapes(const NumericKG& kg, const EmbeddingTable& emb) {
  if (emb.entities.rows() != static_cast<Eigen::Index>(kg.numEntities()) ||
      emb.relations.rows() != static_cast<Eigen::Index>(kg.numRelations()) || emb.entities.cols() != emb.relations.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "embedding table does not match the knowledge graph");
  }
}

}  // namespace

NumericKG buildNumericKg(double min, double max, double step) {
  if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step)) throw Error(ErrorCode::BadRange, "grid bounds must be finite");
  if (!(min < max)) throw Error(ErrorCode::BadRange, "min must be below max");
  if (!(step > 0.0)) throw Error(ErrorCode::BadRange, "step must be positive");
  const double ratio = (max - min) / step;
  if (ratio > kMaxKgIntervals + 1e-6) throw Error(ErrorCode::BadRange, "grid exceeds " + std::to_string(kMaxKgIntervals) + " intervals");
  const double intervals = std::round(ratio);
  if (std::abs(ratio - intervals) > 1e-6 || intervals < 1.0) {
    throw Error(ErrorCode::BadRange, "range is not a whole number of steps");
  }
  NumericKG kg;
  kg.min  = min;
  kg.max  = max;
  kg.step = step;
  const int n = static_cast<int>(intervals);
  for (int i = 0; i <= n; ++i) kg.values.push_back(i == n ? max : min + i * step);
  kg.relations = {"successor"};
  for (int i = 0; i < n; ++i) kg.triplets.push_back({i, 0, i + 1});
  return kg;
}

void MarginConfig::validate() const {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
  if (!(learningRate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be non-negative");
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "dim must be positive");
  if (!std::isfinite(maxNorm)) throw Error(ErrorCode::InvalidArgument, "maxNorm must be finite");
}

double entityNormBound(const NumericKG& kg, const MarginConfig& cfg) {
  if (cfg.maxNorm > 0.0) return cfg.maxNorm;
  return std::max(1.0, cfg.gamma * static_cast<double>(kg.triplets.size()) / 2.0);
}

double kgLoss(const NumericKG& kg, const EmbeddingTable& emb, const MarginConfig& cfg) {
  checkShapes(kg, emb);
  double total = 0.0;
  for (const auto& [h, l, t] : kg.triplets) {
    const Eigen::VectorXd eh = emb.entities.row(h).transpose();
    const Eigen::VectorXd el = emb.relations.row(l).transpose();
    const Eigen::VectorXd et = emb.entities.row(t).transpose();
    total += std::max(0.0, cfg.gamma + distance(eh + el - et, cfg.metric) - distance(et + el - eh, cfg.metric));
  }
  return total;
}

KgGradient kgSubgradient(const NumericKG& kg, const EmbeddingTable& emb, const MarginConfig& cfg) {
  checkShapes(kg, emb);
  KgGradient g{Eigen::MatrixXd::Zero(emb.entities.rows(), emb.entities.cols()),
               Eigen::MatrixXd::Zero(emb.relations.rows(), emb.relations.cols())};
  for (const auto& [h, l, t] : kg.triplets) {
    const Eigen::VectorXd eh = emb.entities.row(h).transpose();
    const Eigen::VectorXd el = emb.relations.row(l).transpose();
    const Eigen::VectorXd et = emb.entities.row(t).transpose();
    const Eigen::VectorXd fwd = eh + el - et;
    const Eigen::VectorXd bwd = et + el - eh;
    if (cfg.gamma + distance(fwd, cfg.metric) - distance(bwd, cfg.metric) <= 0.0) continue;
    const Eigen::VectorXd g1 = distanceGrad(fwd, cfg.metric);
    const Eigen::VectorXd g2 = distanceGrad(bwd, cfg.metric);
    g.entities.row(h) += (g1 + g2).transpose();
    g.entities.row(t) -= (g1 + g2).transpose();
    g.relations.row(l) += (g1 - g2).transpose();
  }
  return g;
}

EmbeddingTable initEmbeddings(const NumericKG& kg, const MarginConfig& cfg) {
  cfg.validate();
  std::mt19937_64                        rng(cfg.seed);
  const double                           bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  std::uniform_real_distribution<double> u(-bound, bound);
  EmbeddingTable                         emb;
  emb.entities.resize(static_cast<Eigen::Index>(kg.numEntities()), cfg.dim);
  emb.relations.resize(static_cast<Eigen::Index>(kg.numRelations()), cfg.dim);
  // Row-major fill so the draw order is independent of Eigen's storage order.
  for (Eigen::Index i = 0; i < emb.entities.rows(); ++i) {
    for (Eigen::Index j = 0; j < cfg.dim; ++j) emb.entities(i, j) = u(rng);
  }
  for (Eigen::Index i = 0; i < emb.relations.rows(); ++i) {
    for (Eigen::Index j = 0; j < cfg.dim; ++j) emb.relations(i, j) = u(rng);
  }
  return emb;
}

void kgStep(const NumericKG& kg, EmbeddingTable& emb, const MarginConfig& cfg) {
  const auto g = kgSubgradient(kg, emb, cfg);
  emb.entities -= cfg.learningRate * g.entities;
  emb.relations -= cfg.learningRate * g.relations;
  const double bound = entityNormBound(kg, cfg);
  for (Eigen::Index i = 0; i < emb.entities.rows(); ++i) {
    const double n = emb.entities.row(i).norm();
    if (n > bound) emb.entities.row(i) *= bound / n;
  }
}

KgTrainResult trainKg(const NumericKG& kg, const MarginConfig& cfg) {
  KgTrainResult result;
  result.table = initEmbeddings(kg, cfg);
  if (kg.triplets.empty()) return result;
  result.lossTrace.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    result.lossTrace.push_back(kgLoss(kg, result.table, cfg));
    kgStep(kg, result.table, cfg);
  }
  result.lossTrace.push_back(kgLoss(kg, result.table, cfg));
  return result;
}

Eigen::VectorXd embedValue(const EmbeddingTable& emb, const NumericKG& kg, double v) {
  checkShapes(kg, emb);
  if (!(v >= kg.min && v <= kg.max)) throw Error(ErrorCode::OutOfRange, "value " + std::to_string(v) + " outside the grid");
  const double pos = (v - kg.min) / kg.step;
  const auto   last = static_cast<Eigen::Index>(kg.numEntities()) - 1;
  const auto   lo   = std::min(static_cast<Eigen::Index>(std::floor(pos)), last);
  const double frac = pos - static_cast<double>(lo);
  if (lo == last || frac <= 0.0) return emb.entities.row(lo).transpose();
  return ((1.0 - frac) * emb.entities.row(lo) + frac * emb.entities.row(lo + 1)).transpose();
}

double kgDirectionalAccuracy(const NumericKG& kg, const EmbeddingTable& emb, const MarginConfig& cfg) {
  checkShapes(kg, emb);
  if (kg.triplets.empty()) return 1.0;
  int ok = 0;
  for (const auto& [h, l, t] : kg.triplets) {
    const Eigen::VectorXd eh = emb.entities.row(h).transpose();
    const Eigen::VectorXd el = emb.relations.row(l).transpose();
    const Eigen::VectorXd et = emb.entities.row(t).transpose();
    if (distance(eh + el - et, cfg.metric) < distance(et + el - eh, cfg.metric)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(kg.triplets.size());
}

Eigen::VectorXd projectOnRelation(const EmbeddingTable& emb, int relation) {
  if (relation < 0 || relation >= emb.relations.rows()) throw Error(ErrorCode::OutOfRange, "relation index out of range");
  const Eigen::VectorXd dir = emb.relations.row(relation).transpose();
  const double          n   = dir.norm();
  if (n == 0.0) return Eigen::VectorXd::Zero(emb.entities.rows());
  return emb.entities * (dir / n);
}

void saveEmbeddingTable(const std::string& path, const NumericKG& kg, const EmbeddingTable& emb, std::string_view meta) {
  checkShapes(kg, emb);
  BinaryWriter w;
  w.bytes(std::string_view(kTableMagic, 8));
  w.scalar<uint32_t>(kTableVersion);
  w.scalar<uint32_t>(static_cast<uint32_t>(emb.dim()));
  w.scalar<uint32_t>(static_cast<uint32_t>(kg.numEntities()));
  w.scalar<uint32_t>(static_cast<uint32_t>(kg.numRelations()));
  w.scalar<double>(kg.min);
  w.scalar<double>(kg.max);
  w.scalar<double>(kg.step);
  w.str(std::string(meta));
  for (const auto* m : {&emb.entities, &emb.relations}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      for (Eigen::Index j = 0; j < m->cols(); ++j) w.scalar<float>(static_cast<float>((*m)(i, j)));
    }
  }
  writeFileBytes(path, w.data());
}

std::pair<NumericKG, EmbeddingTable> loadEmbeddingTable(const std::string& path) {
  BinaryReader r(readFileBytes(path));
  if (r.bytes(8) != std::string_view(kTableMagic, 8)) throw Error(ErrorCode::FormatError, path + " is not an embedding table");
  if (r.scalar<uint32_t>() != kTableVersion) throw Error(ErrorCode::FormatError, "unsupported table version");
  const auto dim       = r.scalar<uint32_t>();
  const auto entities  = r.scalar<uint32_t>();
  const auto relations = r.scalar<uint32_t>();
  const double min  = r.scalar<double>();
  const double max  = r.scalar<double>();
  const double step = r.scalar<double>();
  (void)r.str();
  NumericKG kg = buildNumericKg(min, max, step);
  if (kg.numEntities() != entities || kg.numRelations() != relations) throw Error(ErrorCode::FormatError, "table counts disagree with grid");
  EmbeddingTable emb;
  emb.entities.resize(entities, dim);
  emb.relations.resize(relations, dim);
  for (auto* m : {&emb.entities, &emb.relations}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      for (Eigen::Index j = 0; j < m->cols(); ++j) (*m)(i, j) = static_cast<double>(r.scalar<float>());
    }
  }
  if (!r.atEnd()) throw Error(ErrorCode::FormatError, "trailing bytes in table");
  return {std::move(kg), std::move(emb)};
}

}  // namespace vscreen
