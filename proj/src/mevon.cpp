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

#include "vscreen/mevon.hpp"

#include <algorithm>
#include <map>

namespace vscreen {

void EvolutionConfig::validate() const {
  if (!(theta1 >= 0.0 && theta1 <= 1.0) || !(theta2 >= 0.0 && theta2 <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "thresholds must lie in [0, 1]");
  }
  if (wlIterations < 0) throw Error(ErrorCode::InvalidArgument, "WL iterations must be non-negative");
}

Hierarchy buildHierarchy(std::span<const Molecule> mols) {
  if (mols.empty()) throw Error(ErrorCode::EmptyDataset, "hierarchy needs at least one molecule");
  Hierarchy h;
  h.molecules.assign(mols.begin(), mols.end());
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < mols.size(); ++i) {
    groups[static_cast<int>(mols[i].numHeavyAtoms())].push_back(static_cast<int>(i));
  }
  for (auto& [count, members] : groups) h.layers.push_back({count, std::move(members)});
  return h;
}

namespace {

struct MoleculeFeatures {
  Fingerprint fp;
  std::string smiles;
  WlSignature wl;
};

MoleculeFeatures featuresOf(const Molecule& mol, const EvolutionConfig& cfg) {
  MoleculeFeatures f;
  if (cfg.stage1 == Stage1Metric::Fingerprint) {
    f.fp = morganFingerprint(mol, cfg.fpRadius, cfg.fpWidth);
  } else {
    f.smiles = writeSmiles(mol);
  }
  f.wl = wlSignature(mol, cfg.wlIterations);
  return f;
}

double stage1Score(const MoleculeFeatures& a, const MoleculeFeatures& b, const EvolutionConfig& cfg) {
  return cfg.stage1 == Stage1Metric::Fingerprint ? tanimoto(a.fp, b.fp) : editSimilarity(a.smiles, b.smiles);
}

std::vector<ParentScore> selectParents(const MoleculeFeatures& child, std::span<const int> candidates,
                                       std::span<const MoleculeFeatures> features, const EvolutionConfig& cfg) {
  std::vector<ParentScore> stage1;
  double                   best = -1.0;
  for (int p : candidates) {
    const double s = stage1Score(features[static_cast<std::size_t>(p)], child, cfg);
    if (s < cfg.theta1) continue;
    stage1.push_back({p, s, 0.0});
    best = std::max(best, s);
  }
  std::vector<ParentScore> out;
  for (auto& ps : stage1) {
    if (ps.stage1 != best) continue;
    ps.stage2 = wlSimilarity(features[static_cast<std::size_t>(ps.node)].wl, child.wl);
    if (ps.stage2 >= cfg.theta2) out.push_back(ps);
  }
  return out;
}

const Layer* findLayer(const Hierarchy& h, int heavyAtoms) {
  for (const auto& layer : h.layers) {
    if (layer.heavyAtoms == heavyAtoms) return &layer;
  }
  return nullptr;
}

}  // namespace

EvolutionGraph linkPairs(const Hierarchy& hierarchy, const EvolutionConfig& config) {
  config.validate();
  EvolutionGraph graph;
  graph.hierarchy = hierarchy;
  graph.config    = config;
  graph.labels.assign(hierarchy.molecules.size(), std::nullopt);

  std::vector<MoleculeFeatures> features;
  features.reserve(hierarchy.molecules.size());
  for (const auto& mol : hierarchy.molecules) features.push_back(featuresOf(mol, config));

  for (const auto& layer : hierarchy.layers) {
    const Layer* prev = findLayer(hierarchy, layer.heavyAtoms - 1);
    if (!prev) continue;
    for (int child : layer.members) {
      const auto parents = selectParents(features[static_cast<std::size_t>(child)], prev->members, features, config);
      if (parents.empty()) graph.isolated.push_back(child);
      for (const auto& p : parents) graph.edges.push_back({p.node, child, p.stage1, p.stage2});
    }
  }
  std::sort(graph.edges.begin(), graph.edges.end(),
            [](const EvolutionEdge& a, const EvolutionEdge& b) { return std::pair(a.child, a.parent) < std::pair(b.child, b.parent); });
  std::sort(graph.isolated.begin(), graph.isolated.end());
  return graph;
}

void annotate(EvolutionGraph& graph, std::vector<std::optional<double>> labels) {
  if (labels.size() != graph.hierarchy.molecules.size()) {
    throw Error(ErrorCode::DimensionMismatch, "label count does not match molecule count");
  }
  graph.labels = std::move(labels);
}

std::optional<double> EvolutionGraph::edgeDelta(const EvolutionEdge& e) const {
  const auto& lp = labels[static_cast<std::size_t>(e.parent)];
  const auto& lc = labels[static_cast<std::size_t>(e.child)];
  if (!lp || !lc) return std::nullopt;
  return *lc - *lp;
}

double EvolutionGraph::meanIncomingDelta(int node) const {
  double sum   = 0.0;
  int    count = 0;
  for (const auto& e : edges) {
    if (e.child != node) continue;
    if (auto d = edgeDelta(e)) {
      sum += *d;
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / count;
}

std::vector<ParentScore> attachParents(const EvolutionGraph& graph, const Molecule& query) {
  const Layer* prev = findLayer(graph.hierarchy, static_cast<int>(query.numHeavyAtoms()) - 1);
  if (!prev) return {};
  std::vector<MoleculeFeatures> features(graph.hierarchy.molecules.size());
  for (int p : prev->members) features[static_cast<std::size_t>(p)] = featuresOf(graph.hierarchy.molecules[static_cast<std::size_t>(p)], graph.config);
  return selectParents(featuresOf(query, graph.config), prev->members, features, graph.config);
}

double evoPredict(const EvolutionGraph& graph, const Molecule& query, std::span<const std::optional<double>> labels) {
  if (labels.size() != graph.hierarchy.molecules.size()) {
    throw Error(ErrorCode::DimensionMismatch, "label count does not match molecule count");
  }
  EvolutionGraph labeled = graph;
  labeled.labels.assign(labels.begin(), labels.end());
  return evoPredict(labeled, query);
}

double evoPredict(const EvolutionGraph& graph, const Molecule& query) {
  auto parents = attachParents(graph, query);
  std::erase_if(parents, [&](const ParentScore& p) { return !graph.labels[static_cast<std::size_t>(p.node)]; });
  if (parents.empty()) throw Error(ErrorCode::NoParentFound, "no labeled parent for " + (query.name().empty() ? writeSmiles(query) : query.name()));
  // Summation order fixed by node index so parent input order cannot matter.
  std::sort(parents.begin(), parents.end(), [](const ParentScore& a, const ParentScore& b) { return a.node < b.node; });
  double total = 0.0;
  for (const auto& p : parents) total += p.stage1;
  double prediction = 0.0;
  for (const auto& p : parents) {
    const double w = total > 0.0 ? p.stage1 / total : 1.0 / static_cast<double>(parents.size());
    prediction += w * (*graph.labels[static_cast<std::size_t>(p.node)] + graph.meanIncomingDelta(p.node));
  }
  return prediction;
}

}  // namespace vscreen
