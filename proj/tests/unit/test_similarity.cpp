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

#include "oracles.hpp"
#include "vscreen/similarity.hpp"

using namespace vscreen;

namespace {

Fingerprint fromBits(std::initializer_list<int> bits, int width = 64) {
  Fingerprint fp(width, 0);
  for (int b : bits) fp.set(b);
  return fp;
}

std::vector<Molecule> corpus() {
  static const auto mols = loadMolecules(std::string(VSCREEN_DATA_DIR) + "/corpus.smi");
  return mols;
}

}  // namespace

TEST(Morgan, MethaneRadiusZeroSetsOneBit) {
  EXPECT_EQ(morganFingerprint(parseSmiles("C"), 0).popcount(), 1);
}

TEST(Morgan, PermutedSmilesGiveIdenticalBits) {
  EXPECT_EQ(morganFingerprint(parseSmiles("OCC")), morganFingerprint(parseSmiles("CCO")));
  EXPECT_EQ(morganFingerprint(parseSmiles("Oc1ccccc1C")), morganFingerprint(parseSmiles("Cc1ccccc1O")));
  EXPECT_EQ(morganFingerprint(parseSmiles("CC")), morganFingerprint(parseSmiles("CC")));
}

TEST(Morgan, RandomAtomPermutationsProperty) {
  std::mt19937_64 rng(3);
  const auto      mols = corpus();
  for (std::size_t k = 0; k < mols.size(); k += 7) {
    std::vector<int> perm(mols[k].numAtoms());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_EQ(morganFingerprint(mols[k]), morganFingerprint(mols[k].permuted(perm))) << mols[k].name();
  }
}

TEST(Morgan, GoldenBitsAreFrozen) {
  // Frozen from the documented hash constants; any change here breaks stored fingerprints.
  EXPECT_EQ(morganFingerprint(parseSmiles("C"), 0, 2048).onBits(), (std::vector<int>{1567}));
  EXPECT_EQ(morganFingerprint(parseSmiles("CCO"), 1, 64).onBits(), (std::vector<int>{14, 28, 31, 33, 40, 56}));
}

TEST(Morgan, RejectsBadParameters) {
  EXPECT_THROW((void)morganFingerprint(parseSmiles("C"), -1), Error);
  EXPECT_THROW((void)morganFingerprint(parseSmiles("C"), 2, 100), Error);
  EXPECT_THROW((void)morganFingerprint(parseSmiles("C"), 2, 32), Error);
}

TEST(Tanimoto, Examples) {
  const auto f = morganFingerprint(parseSmiles("c1ccccc1O"));
  EXPECT_EQ(tanimoto(f, f), 1.0);
  EXPECT_EQ(tanimoto(fromBits({1, 2}), fromBits({5, 6})), 0.0);
  EXPECT_EQ(tanimoto(fromBits({1, 2, 3}), fromBits({2, 3, 4})), 0.5);
  EXPECT_EQ(tanimoto(fromBits({}), fromBits({})), 1.0);
}

TEST(Tanimoto, WidthMismatch) {
  try {
    (void)tanimoto(fromBits({1}, 64), fromBits({1}, 128));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WidthMismatch);
  }
}

TEST(EditSimilarity, Examples) {
  EXPECT_EQ(editSimilarity("CCO", "CCO"), 1.0);
  EXPECT_EQ(editSimilarity("C", "O"), 0.0);
  EXPECT_DOUBLE_EQ(editSimilarity("CC", "CCO"), oracle::editSimilarity("CC", "CCO"));
  EXPECT_DOUBLE_EQ(editSimilarity("CC", "CCO"), 2.0 / 3.0);
  EXPECT_EQ(editSimilarity("", ""), 1.0);
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
}

TEST(Wl, IsomorphicMoleculesScoreOne) {
  EXPECT_DOUBLE_EQ(wlSimilarity(parseSmiles("OCC"), parseSmiles("CCO"), 3), 1.0);
  EXPECT_DOUBLE_EQ(wlSimilarity(parseSmiles("c1ccccc1C"), parseSmiles("Cc1ccccc1"), 5), 1.0);
}

TEST(Wl, DisjointLabelsScoreZero) {
  for (int h = 0; h < 4; ++h) EXPECT_EQ(wlSimilarity(parseSmiles("C"), parseSmiles("N"), h), 0.0);
}

TEST(Wl, EthaneEthanolHandComputed) {
  // Iteration 0: ethane {C:2}, ethanol {C:2, O:1}.
  // Iteration 1: ethane {C(C):2}, ethanol {C(C):1, C(C,O):1, O(C):1}.
  // k(a,b) = 2*2 + 2*1 = 6; k(a,a) = 4 + 4 = 8; k(b,b) = 5 + 3 = 8.
  EXPECT_DOUBLE_EQ(wlSimilarity(parseSmiles("CC"), parseSmiles("CCO"), 1), 6.0 / 8.0);
  EXPECT_DOUBLE_EQ(oracle::wlSimilarity(parseSmiles("CC"), parseSmiles("CCO"), 1), 6.0 / 8.0);
}

TEST(Wl, MatchesStringLabelOracleOnCorpusPairs) {
  const auto      mols = corpus();
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> pick(0, mols.size() - 1);
  for (int trial = 0; trial < 60; ++trial) {
    const auto& a = mols[pick(rng)];
    const auto& b = mols[pick(rng)];
    for (int h : {0, 1, 3}) {
      EXPECT_NEAR(wlSimilarity(a, b, h), oracle::wlSimilarity(a, b, h), 1e-12) << a.name() << " " << b.name();
      EXPECT_EQ(wlSimilarity(a, b, h), wlSimilarity(b, a, h));
    }
  }
}

TEST(Wl, NonIncreasingInIterationsOnCorpusPairs) {
  const auto      mols = corpus();
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> pick(0, mols.size() - 1);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto& a = mols[pick(rng)];
    const auto& b = mols[pick(rng)];
    if (isIsomorphic(a, b)) continue;
    double prev = wlSimilarity(a, b, 0);
    for (int h = 1; h <= 4; ++h) {
      const double cur = wlSimilarity(a, b, h);
      EXPECT_LE(cur, prev + 1e-12) << a.name() << " " << b.name() << " h=" << h;
      EXPECT_GE(cur, 0.0);
      EXPECT_LE(cur, 1.0);
      prev = cur;
    }
    ++checked;
  }
  EXPECT_GT(checked, 150);
}

TEST(SimilarityMatrix, PartitioningDoesNotChangeOutput) {
  auto mols = corpus();
  mols.resize(40);
  for (auto metric : {SimilarityMetric::Tanimoto, SimilarityMetric::Edit, SimilarityMetric::WL}) {
    SimilarityOptions opts;
    opts.metric     = metric;
    const auto one  = similarityMatrix(mols, mols, opts, 1);
    const auto four = similarityMatrix(mols, mols, opts, 4);
    EXPECT_EQ(one, four);
    EXPECT_EQ(one, one.transpose());
    for (Eigen::Index i = 0; i < one.rows(); ++i) EXPECT_EQ(one(i, i), 1.0);
  }
}
