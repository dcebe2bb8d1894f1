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

#include <random>
#include <set>

#include "oracles.hpp"
#include "vscreen/mevon.hpp"

using namespace vscreen;

namespace {

std::vector<Molecule> mols(std::initializer_list<const char*> smiles) {
  std::vector<Molecule> out;
  for (const char* s : smiles) {
    out.push_back(parseSmiles(s));
    out.back().setName(s);
  }
  return out;
}

std::set<std::pair<int, int>> edgeSet(const EvolutionGraph& g) {
  std::set<std::pair<int, int>> s;
  for (const auto& e : g.edges) s.emplace(e.parent, e.child);
  return s;
}

std::vector<Molecule> smallCorpus() {
  auto all = loadMolecules(std::string(VSCREEN_DATA_DIR) + "/corpus.smi");
  std::vector<Molecule> out;
  for (auto& m : all) {
    if (m.numHeavyAtoms() <= 9) out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

TEST(BuildHierarchy, GroupsByHeavyAtomCount) {
  const auto h = buildHierarchy(mols({"C", "CC", "CCO"}));
  ASSERT_EQ(h.layers.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(h.layers[static_cast<std::size_t>(k)].heavyAtoms, k + 1);
    EXPECT_EQ(h.layers[static_cast<std::size_t>(k)].members, std::vector<int>{k});
  }
  const auto single = buildHierarchy(mols({"C", "O"}));
  ASSERT_EQ(single.layers.size(), 1u);
  EXPECT_EQ(single.layers[0].members, (std::vector<int>{0, 1}));
}

TEST(BuildHierarchy, EmptyLayersAbsentAndHydrogensIgnored) {
  const auto h = buildHierarchy(mols({"CCCCC", "C", "[H][H]", "[H]C"}));
  std::vector<int> keys;
  for (const auto& l : h.layers) keys.push_back(l.heavyAtoms);
  EXPECT_EQ(keys, (std::vector<int>{0, 1, 5}));
  EXPECT_EQ(h.layers[1].members, (std::vector<int>{1, 3}));
  EXPECT_THROW((void)buildHierarchy(std::vector<Molecule>{}), Error);
}

TEST(LinkPairs, VacuousThresholdsKeepPerChildMaxima) {
  const auto h = buildHierarchy(mols({"C", "N", "CC", "CO", "CCO", "CCN"}));
  EvolutionConfig cfg;
  cfg.theta1 = 0.0;
  cfg.theta2 = 0.0;
  const auto g = linkPairs(h, cfg);
  // Every child has at least one parent, and each kept parent attains the child's max.
  for (int child = 2; child < 6; ++child) {
    double best = 0.0;
    for (const auto& e : g.edges) {
      if (e.child == child) best = std::max(best, e.stage1);
    }
    bool any = false;
    for (const auto& e : g.edges) {
      if (e.child != child) continue;
      any = true;
      EXPECT_EQ(e.stage1, best);
    }
    EXPECT_TRUE(any) << child;
  }
  EXPECT_TRUE(g.isolated.empty());
}

TEST(LinkPairs, ThetaTwoOneRequiresIdenticalSignatures) {
  const auto h = buildHierarchy(mols({"C", "CC", "CCO", "OCC"}));
  EvolutionConfig cfg;
  cfg.theta1 = 0.0;
  cfg.theta2 = 1.0;
  const auto g = linkPairs(h, cfg);
  for (const auto& e : g.edges) EXPECT_EQ(e.stage2, 1.0);
  // Different heavy-atom counts never share a normalized WL signature.
  EXPECT_TRUE(g.edges.empty());
}

TEST(LinkPairs, ThreeMoleculeChainMatchesOracleScores) {
  const auto ms = mols({"C", "CC", "CCO"});
  EvolutionConfig cfg;
  cfg.stage1   = Stage1Metric::Edit;
  cfg.theta1   = 0.1;
  cfg.theta2   = 0.1;
  const auto g = linkPairs(buildHierarchy(ms), cfg);
  ASSERT_EQ(g.edges.size(), 2u);
  const double expectedStage1[2] = {0.5, 2.0 / 3.0};
  // C vs CC: iteration-0 dot 1*2 over norms sqrt(4)*sqrt(16).
  EXPECT_DOUBLE_EQ(g.edges[0].stage2, 0.25);
  const int pairs[2][2] = {{0, 1}, {1, 2}};
  for (int k = 0; k < 2; ++k) {
    const auto& e = g.edges[static_cast<std::size_t>(k)];
    EXPECT_EQ(e.parent, pairs[k][0]);
    EXPECT_EQ(e.child, pairs[k][1]);
    const auto& p = ms[static_cast<std::size_t>(e.parent)];
    const auto& c = ms[static_cast<std::size_t>(e.child)];
    EXPECT_DOUBLE_EQ(e.stage1, oracle::editSimilarity(writeSmiles(p), writeSmiles(c)));
    EXPECT_DOUBLE_EQ(e.stage1, expectedStage1[k]);
    EXPECT_DOUBLE_EQ(e.stage2, oracle::wlSimilarity(p, c, 3));
    EXPECT_GE(e.stage1, 0.1);
    EXPECT_GE(e.stage2, 0.1);
  }
  // Methane and ethane share no Morgan environment, so the fingerprint metric drops C->CC.
  cfg.stage1 = Stage1Metric::Fingerprint;
  const auto fp = linkPairs(buildHierarchy(ms), cfg);
  for (const auto& e : fp.edges) EXPECT_NE(e.parent, 0);
}

TEST(LinkPairs, EditMetricIsSelectable) {
  EvolutionConfig cfg;
  cfg.stage1 = Stage1Metric::Edit;
  cfg.theta1 = 0.3;
  cfg.theta2 = 0.0;
  const auto ms = mols({"CC", "CCC", "CCO"});
  const auto g  = linkPairs(buildHierarchy(ms), cfg);
  for (const auto& e : g.edges) {
    EXPECT_DOUBLE_EQ(e.stage1, oracle::editSimilarity(writeSmiles(ms[static_cast<std::size_t>(e.parent)]),
                                                       writeSmiles(ms[static_cast<std::size_t>(e.child)])));
  }
}

TEST(LinkPairs, RaisingThresholdsNeverAddsEdges) {
  const auto      h = buildHierarchy(smallCorpus());
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    EvolutionConfig lo;
    lo.theta1 = u(rng) * 0.6;
    lo.theta2 = u(rng) * 0.6;
    EvolutionConfig hi = lo;
    hi.theta1 += u(rng) * 0.4;
    hi.theta2 += u(rng) * 0.4;
    const auto elo = edgeSet(linkPairs(h, lo));
    const auto ehi = edgeSet(linkPairs(h, hi));
    for (const auto& e : ehi) EXPECT_TRUE(elo.count(e)) << "edge appeared when thresholds rose";
  }
}

TEST(LinkPairs, EdgesRespectLayeringAndThresholds) {
  const auto h = buildHierarchy(smallCorpus());
  EvolutionConfig cfg;
  const auto g = linkPairs(h, cfg);
  EXPECT_FALSE(g.edges.empty());
  for (const auto& e : g.edges) {
    EXPECT_EQ(h.molecules[static_cast<std::size_t>(e.child)].numHeavyAtoms(),
              h.molecules[static_cast<std::size_t>(e.parent)].numHeavyAtoms() + 1);
    EXPECT_GE(e.stage1, cfg.theta1);
    EXPECT_GE(e.stage2, cfg.theta2);
  }
}

TEST(EvoPredict, SingleParent) {
  EvolutionConfig cfg;
  cfg.theta1 = 0.0;
  cfg.theta2 = 0.0;
  const auto g = linkPairs(buildHierarchy(mols({"CC"})), cfg);
  const std::vector<std::optional<double>> labels = {5.0};
  EXPECT_DOUBLE_EQ(evoPredict(g, parseSmiles("CCO"), labels), 5.0);
}

TEST(EvoPredict, TwoTiedParentsAverage) {
  EvolutionConfig cfg;
  cfg.theta1 = 0.0;
  cfg.theta2 = 0.0;
  // Two copies of the same parent are tied by construction.
  const auto g = linkPairs(buildHierarchy(mols({"CC", "CC"})), cfg);
  const std::vector<std::optional<double>> labels = {4.0, 6.0};
  EXPECT_DOUBLE_EQ(evoPredict(g, parseSmiles("CCO"), labels), 5.0);
}

TEST(EvoPredict, NoParentFound) {
  const auto g = linkPairs(buildHierarchy(mols({"CC"})), EvolutionConfig{});
  const std::vector<std::optional<double>> labels = {1.0};
  try {
    (void)evoPredict(g, parseSmiles("CCCCC"), labels);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoParentFound);
  }
  const std::vector<std::optional<double>> unlabeled = {std::nullopt};
  EvolutionConfig loose;
  loose.theta1 = 0.0;
  loose.theta2 = 0.0;
  EXPECT_THROW((void)evoPredict(linkPairs(buildHierarchy(mols({"CC"})), loose), parseSmiles("CCO"), unlabeled), Error);
}

TEST(EvoPredict, ConstantLabelsPropagate) {
  const auto corpus = smallCorpus();
  EvolutionConfig cfg;
  cfg.theta1 = 0.2;
  cfg.theta2 = 0.2;
  auto g = linkPairs(buildHierarchy(corpus), cfg);
  annotate(g, std::vector<std::optional<double>>(corpus.size(), 3.25));
  int predicted = 0;
  for (const char* q : {"CCCCCCCO", "c1ccccc1CCO", "CC(C)CCN", "OC1CCCCC1C"}) {
    try {
      EXPECT_NEAR(evoPredict(g, parseSmiles(q)), 3.25, 1e-12) << q;
      ++predicted;
    } catch (const Error&) {
    }
  }
  EXPECT_GT(predicted, 0);
}

TEST(EvoPredict, MatchesIndependentWeightedSum) {
  // Independent recomputation over the previous layer with oracle similarity functions.
  const auto corpus = smallCorpus();
  std::vector<std::optional<double>> labels(corpus.size());
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < corpus.size(); ++i) labels[i] = 0.3 * static_cast<double>(corpus[i].numHeavyAtoms()) + noise(rng);
  EvolutionConfig cfg;
  cfg.theta1 = 0.25;
  cfg.theta2 = 0.25;
  auto g = linkPairs(buildHierarchy(corpus), cfg);
  annotate(g, labels);

  int checked = 0;
  for (const char* q : {"CCCCCCCCO", "c1ccccc1CCC", "CC(C)CCCN", "OC1CCCCC1C", "NCCCCCO"}) {
    const auto query = parseSmiles(q);
    // Oracle: stage-1 tanimoto over bit sets, per-child max set, WL oracle filter.
    std::vector<std::pair<std::size_t, double>> cand;
    double best = -1.0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus[i].numHeavyAtoms() + 1 != query.numHeavyAtoms()) continue;
      const double s = oracle::tanimoto(morganFingerprint(corpus[i]).onBits(), morganFingerprint(query).onBits());
      if (s >= cfg.theta1) {
        cand.emplace_back(i, s);
        best = std::max(best, s);
      }
    }
    std::vector<std::pair<std::size_t, double>> parents;
    for (auto [i, s] : cand) {
      if (s == best && oracle::wlSimilarity(corpus[i], query, 3) >= cfg.theta2) parents.emplace_back(i, s);
    }
    if (parents.empty()) {
      EXPECT_THROW((void)evoPredict(g, query), Error);
      continue;
    }
    double wsum = 0.0;
    for (auto [i, s] : parents) wsum += s;
    double expected = 0.0;
    for (auto [i, s] : parents) {
      double dsum = 0.0;
      int    dn   = 0;
      for (const auto& e : g.edges) {
        if (e.child == static_cast<int>(i)) {
          dsum += *labels[i] - *labels[static_cast<std::size_t>(e.parent)];
          ++dn;
        }
      }
      expected += (s / wsum) * (*labels[i] + (dn ? dsum / dn : 0.0));
    }
    EXPECT_NEAR(evoPredict(g, query), expected, 1e-12) << q;
    ++checked;
  }
  EXPECT_GE(checked, 2);
}
