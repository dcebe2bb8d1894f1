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

#ifndef VSCREEN_DOMAIN_HPP
#define VSCREEN_DOMAIN_HPP

#include <Eigen/Dense>

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vscreen/chem.hpp"
#include "vscreen/similarity.hpp"

namespace vscreen {

constexpr int kMaxDomainSize = 256;

//! Empirical distribution with uniform weights over the rows of `points`.
struct DomainSample {
  std::string     id;
  Eigen::MatrixXd points;  //!< n x d
};

//! Fingerprint bits as 0/1 rows.
DomainSample fingerprintDomain(std::string id, std::span<const Molecule> mols, int radius = kDefaultFingerprintRadius,
                               int width = kDefaultFingerprintWidth);

struct WassersteinResult {
  double          distance = 0.0;
  Eigen::MatrixXd plan;  //!< n x m, row sums 1/n, column sums 1/m
};

/**
 * Exact 1-Wasserstein distance with Euclidean ground cost. Solved as an integer
 * transportation problem (supply m per source row, demand n per target column) by
 * successive shortest paths, so the optimum is exact up to floating-point cost sums.
 * Throws DimensionMismatch, TooLarge, InvalidArgument (empty or non-finite samples).
 */
WassersteinResult wassersteinCoupling(const DomainSample& a, const DomainSample& b);
double            wassersteinDistance(const DomainSample& a, const DomainSample& b);

struct RankedSource {
  std::string id;
  double      distance = 0.0;
};

//! Ascending distances, ties kept in input order, truncated to min(k, sources.size()).
std::vector<RankedSource> selectSources(const DomainSample& target, std::span<const DomainSample> sources, int k,
                                        int threads = 1);

}  // namespace vscreen

#endif  // VSCREEN_DOMAIN_HPP
