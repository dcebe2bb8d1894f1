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

#ifndef VSCREEN_KG_HPP
#define VSCREEN_KG_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vscreen {

constexpr int kMaxKgIntervals = 10000;

//! Chain-structured numeric knowledge graph; relation 0 is "successor".
struct NumericKG {
  double                          min  = 0.0;
  double                          max  = 0.0;
  double                          step = 0.0;
  std::vector<double>             values;  //!< entity i has value min + i * step
  std::vector<std::string>        relations;
  std::vector<std::array<int, 3>> triplets;  //!< (head, relation, tail)

  [[nodiscard]] std::size_t numEntities() const { return values.size(); }
  [[nodiscard]] std::size_t numRelations() const { return relations.size(); }
};

/**
 * Grid min, min + step, ..., max with successor triplets between neighbours.
 * The range must be a whole number of steps and contain at most kMaxKgIntervals of them.
 */
NumericKG buildNumericKg(double min, double max, double step);

enum class KgMetric { L1, L2 };

struct MarginConfig {
  double   gamma        = 1.0;
  KgMetric metric       = KgMetric::L2;
  double   learningRate = 0.01;
  int      epochs       = 2000;
  int      dim          = 8;
  uint64_t seed         = 0;
  //! Entity norm bound applied after each step; <= 0 selects entityNormBound().
  double   maxNorm      = 0.0;

  void validate() const;
};

struct EmbeddingTable {
  Eigen::MatrixXd entities;   //!< numEntities x dim
  Eigen::MatrixXd relations;  //!< numRelations x dim

  [[nodiscard]] int dim() const { return static_cast<int>(entities.cols()); }
};

/**
 * Automatic entity norm bound: max(1, gamma * intervals / 2). A chain whose hinges are all
 * inactive needs a projected span of at least gamma * intervals / 2, which the unit ball
 * cannot hold beyond a couple of intervals.
 */
double entityNormBound(const NumericKG& kg, const MarginConfig& cfg);

//! Sum over triplets of max(0, gamma + d(h + l, t) - d(t + l, h)).
double kgLoss(const NumericKG& kg, const EmbeddingTable& emb, const MarginConfig& cfg);

struct KgGradient {
  Eigen::MatrixXd entities;
  Eigen::MatrixXd relations;
};

//! Subgradient of kgLoss (zero where the hinge is inactive or a norm is at its kink).
KgGradient kgSubgradient(const NumericKG& kg, const EmbeddingTable& emb, const MarginConfig& cfg);

//! Seeded uniform initialization in [-6/sqrt(dim), 6/sqrt(dim)].
EmbeddingTable initEmbeddings(const NumericKG& kg, const MarginConfig& cfg);

//! One full-batch step followed by projecting entity rows into the norm ball.
void kgStep(const NumericKG& kg, EmbeddingTable& emb, const MarginConfig& cfg);

struct KgTrainResult {
  EmbeddingTable      table;
  std::vector<double> lossTrace;  //!< loss before each epoch, then the final loss
};

KgTrainResult trainKg(const NumericKG& kg, const MarginConfig& cfg);

//! Linear interpolation between the entity rows bracketing `v`. Throws OutOfRange.
Eigen::VectorXd embedValue(const EmbeddingTable& emb, const NumericKG& kg, double v);

//! Fraction of triplets with d(h + l, t) < d(t + l, h).
double kgDirectionalAccuracy(const NumericKG& kg, const EmbeddingTable& emb, const MarginConfig& cfg);

//! Projections of entity rows onto the normalized relation vector `relation`.
Eigen::VectorXd projectOnRelation(const EmbeddingTable& emb, int relation = 0);

/**
 * Binary table: "VSKGEMB1" magic, uint32 version, uint32 dim, uint32 entity count,
 * uint32 relation count, float64 min/max/step, a uint32-length meta string (JSON or
 * empty), then entity and relation rows as row-major little-endian float32.
 */
void saveEmbeddingTable(const std::string& path, const NumericKG& kg, const EmbeddingTable& emb, std::string_view meta = {});
std::pair<NumericKG, EmbeddingTable> loadEmbeddingTable(const std::string& path);

}  // namespace vscreen

#endif  // VSCREEN_KG_HPP
