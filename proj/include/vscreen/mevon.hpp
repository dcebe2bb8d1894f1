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

#ifndef VSCREEN_MEVON_HPP
#define VSCREEN_MEVON_HPP

#include <optional>
#include <span>
#include <vector>

#include "vscreen/chem.hpp"
#include "vscreen/similarity.hpp"

namespace vscreen {

enum class Stage1Metric { Fingerprint, Edit };

struct EvolutionConfig {
  double       theta1       = 0.5;
  double       theta2       = 0.5;
  Stage1Metric stage1       = Stage1Metric::Fingerprint;
  int          wlIterations = kDefaultWlIterations;
  int          fpRadius     = kDefaultFingerprintRadius;
  int          fpWidth      = kDefaultFingerprintWidth;

  void validate() const;
};

struct Layer {
  int              heavyAtoms = 0;
  std::vector<int> members;  //!< indices into Hierarchy::molecules, input order
};

struct Hierarchy {
  std::vector<Molecule> molecules;
  std::vector<Layer>    layers;  //!< ascending heavy-atom count; empty layers absent
};

//! Groups molecules by heavy-atom count.
Hierarchy buildHierarchy(std::span<const Molecule> mols);

struct EvolutionEdge {
  int    parent = 0;
  int    child  = 0;
  double stage1 = 0.0;
  double stage2 = 0.0;
};

struct EvolutionGraph {
  Hierarchy                          hierarchy;
  EvolutionConfig                    config;
  std::vector<EvolutionEdge>         edges;  //!< sorted by (child, parent)
  std::vector<std::optional<double>> labels;
  //! Children with a predecessor layer but no surviving parent.
  std::vector<int>                   isolated;

  [[nodiscard]] std::optional<double> edgeDelta(const EvolutionEdge& e) const;
  //! Mean label delta over incoming edges of `node` that have both endpoints labeled; 0 if none.
  [[nodiscard]] double meanIncomingDelta(int node) const;
};

/**
 * Two-stage evolutionary linking between consecutive layers. Stage 1 keeps, per child,
 * the candidate parents in the previous layer whose stage-1 similarity is >= theta1
 * and equal to the per-child maximum (ties kept); stage 2 keeps those whose WL
 * similarity is >= theta2.
 */
EvolutionGraph linkPairs(const Hierarchy& hierarchy, const EvolutionConfig& config);

//! Attaches per-node labels (size must equal the molecule count).
void annotate(EvolutionGraph& graph, std::vector<std::optional<double>> labels);

struct ParentScore {
  int    node   = 0;
  double stage1 = 0.0;
  double stage2 = 0.0;
};

//! Parents `query` would receive under the graph's linking rules.
std::vector<ParentScore> attachParents(const EvolutionGraph& graph, const Molecule& query);

/**
 * Propagation baseline: sum over labeled parents of w_p * (label_p + mean incoming delta at p),
 * with w_p the stage-1 scores normalized to sum 1. Throws NoParentFound.
 */
double evoPredict(const EvolutionGraph& graph, const Molecule& query, std::span<const std::optional<double>> labels);
double evoPredict(const EvolutionGraph& graph, const Molecule& query);

}  // namespace vscreen

#endif  // VSCREEN_MEVON_HPP
