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

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "vscreen/chem.hpp"

using namespace vscreen;

namespace {

ErrorCode parseErrorCode(const std::string& smiles, std::size_t* position = nullptr) {
  try {
    (void)parseSmiles(smiles);
  } catch (const Error& e) {
    if (position) *position = e.position().value_or(smiles.size() + 100);
    return e.code();
  }
  ADD_FAILURE() << "expected parse failure for " << smiles;
  return ErrorCode::InvalidArgument;
}

std::vector<int> randomPermutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

}  // namespace

TEST(ParseSmiles, Methane) {
  const auto mol = parseSmiles("C");
  ASSERT_EQ(mol.numAtoms(), 1u);
  EXPECT_EQ(mol.numBonds(), 0u);
  EXPECT_EQ(mol.atom(0).element, Element::C);
  EXPECT_EQ(mol.atom(0).implicitH, 4);
}

TEST(ParseSmiles, Cyclopropane) {
  const auto mol = parseSmiles("C1CC1");
  ASSERT_EQ(mol.numAtoms(), 3u);
  ASSERT_EQ(mol.numBonds(), 3u);
  for (const auto& b : mol.bonds()) EXPECT_EQ(b.order, BondOrder::Single);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(mol.atom(i).implicitH, 2);
  EXPECT_EQ(mol.ringCount(), 1);
}

TEST(ParseSmiles, UnclosedBranchReportsEndPosition) {
  std::size_t pos = 0;
  EXPECT_EQ(parseErrorCode("C(", &pos), ErrorCode::UnbalancedBracket);
  EXPECT_EQ(pos, 2u);
}

TEST(ParseSmiles, ErrorKindsAndPositions) {
  std::size_t pos = 0;
  EXPECT_EQ(parseErrorCode("CC)", &pos), ErrorCode::UnbalancedBracket);
  EXPECT_EQ(pos, 2u);
  EXPECT_EQ(parseErrorCode("C[NH4", &pos), ErrorCode::UnbalancedBracket);
  EXPECT_LE(pos, 5u);
  EXPECT_EQ(parseErrorCode("CX", &pos), ErrorCode::UnknownElement);
  EXPECT_EQ(pos, 1u);
  EXPECT_EQ(parseErrorCode("C[Xe]", &pos), ErrorCode::UnknownElement);
  EXPECT_EQ(pos, 2u);
  EXPECT_EQ(parseErrorCode("CB", &pos), ErrorCode::UnknownElement);
  EXPECT_EQ(parseErrorCode("C1CC", &pos), ErrorCode::UnclosedRing);
  EXPECT_EQ(pos, 1u);
  EXPECT_EQ(parseErrorCode("C(C)(C)(C)(C)C", &pos), ErrorCode::ValenceViolation);
  EXPECT_EQ(pos, 0u);
  EXPECT_EQ(parseErrorCode("O=O=O", &pos), ErrorCode::ValenceViolation);
  EXPECT_EQ(pos, 2u);
  EXPECT_EQ(parseErrorCode("[CH5]", &pos), ErrorCode::ValenceViolation);
}

TEST(ParseSmiles, RejectsStereoAndIsotopes) {
  EXPECT_EQ(parseErrorCode("C[C@H](N)O"), ErrorCode::Unsupported);
  EXPECT_EQ(parseErrorCode("F/C=C/F"), ErrorCode::Unsupported);
  EXPECT_EQ(parseErrorCode("[13CH4]"), ErrorCode::Unsupported);
}

TEST(ParseSmiles, PositionsAlwaysWithinInput) {
  const std::vector<std::string> bad = {"C(", "((", ")", "C1", "C%1", "[", "[C", "C=", "C..C", "=C", "c1cc", "C(C", "Q"};
  for (const auto& s : bad) {
    try {
      (void)parseSmiles(s);
      ADD_FAILURE() << s;
    } catch (const Error& e) {
      ASSERT_TRUE(e.position().has_value()) << s << " " << e.what();
      EXPECT_LE(*e.position(), s.size()) << s;
    }
  }
}

TEST(ParseSmiles, BracketAtomsAndCharges) {
  const auto nitro = parseSmiles("C[N+](=O)[O-]");
  EXPECT_EQ(nitro.atom(1).charge, 1);
  EXPECT_EQ(nitro.atom(3).charge, -1);
  EXPECT_EQ(nitro.atom(3).implicitH, 0);
  const auto ammonium = parseSmiles("[NH4+]");
  EXPECT_EQ(ammonium.atom(0).implicitH, 4);
  const auto pyrrole = parseSmiles("c1cc[nH]c1");
  EXPECT_EQ(pyrrole.atom(3).implicitH, 1);
  EXPECT_EQ(pyrrole.atom(0).implicitH, 1);
}

TEST(ParseSmiles, RingClosureVariants) {
  const auto pct = parseSmiles("C%10CCC%10");
  EXPECT_EQ(pct.numBonds(), 4u);
  const auto dbl = parseSmiles("C=1CCC1");
  EXPECT_EQ(dbl.bond(static_cast<std::size_t>(dbl.findBond(0, 3))).order, BondOrder::Double);
  const auto multi = parseSmiles("C12CC1CC2");
  EXPECT_EQ(multi.ringCount(), 2);
  const auto dot = parseSmiles("CC.O");
  EXPECT_EQ(dot.numComponents(), 2);
}

TEST(ParseSmiles, AromaticImplicitHydrogens) {
  const auto thiophene = parseSmiles("c1ccsc1");
  EXPECT_EQ(thiophene.atom(3).implicitH, 0);
  const auto furan = parseSmiles("c1ccoc1");
  EXPECT_EQ(furan.atom(3).implicitH, 0);
  const auto pyridine = parseSmiles("c1ccncc1");
  EXPECT_EQ(pyridine.atom(3).implicitH, 0);
  const auto naphthalene = parseSmiles("c1ccc2ccccc2c1");
  EXPECT_EQ(naphthalene.atom(3).implicitH, 0);
  EXPECT_EQ(naphthalene.atom(0).implicitH, 1);
  const auto sulfonamide = parseSmiles("NS(=O)(=O)C");
  EXPECT_EQ(sulfonamide.atom(1).implicitH, 0);
}

TEST(WriteSmiles, Methane) { EXPECT_EQ(writeSmiles(parseSmiles("C")), "C"); }

TEST(WriteSmiles, AtomPermutationsGiveIdenticalText) {
  std::mt19937_64                rng(11);
  const std::vector<std::string> inputs = {"CCO", "c1ccccc1O", "CC(C)(C)C(F)(F)F", "c1ccc2ccccc2c1",
                                           "C1CC2CCC1CC2", "O=C(O)c1ccncc1", "C[N+](=O)[O-]", "C1CC1.C1CCC1",
                                           "c1ccc2[nH]ccc2c1", "FC(F)(F)c1cc(C(F)(F)F)cc(C(F)(F)F)c1"};
  for (const auto& s : inputs) {
    const auto        mol      = parseSmiles(s);
    const std::string expected = writeSmiles(mol);
    for (int trial = 0; trial < 20; ++trial) {
      const auto perm = randomPermutation(mol.numAtoms(), rng);
      EXPECT_EQ(writeSmiles(mol.permuted(perm)), expected) << s;
    }
  }
}

TEST(WriteSmiles, RoundTripIsIsomorphic) {
  for (const auto& s : {"CCO", "c1ccccc1-c1ccccc1", "C#N", "OC(=O)C=CC(=O)O", "[NH4+].[Cl-]", "c1cc[nH]c1", "C1CCCCCCCCCCC1"}) {
    const auto mol  = parseSmiles(s);
    const auto back = parseSmiles(writeSmiles(mol));
    EXPECT_TRUE(isIsomorphic(mol, back)) << s << " -> " << writeSmiles(mol);
  }
}

TEST(WriteSmiles, PolycyclicCagesRoundTrip) {
  for (const auto& s : {"C12C3C4C1C5C2C3C45", "C1C2CC3CC1CC(C2)C3", "C%11CC%12CC%11C%12"}) {
    const auto mol  = parseSmiles(s);
    const auto back = parseSmiles(writeSmiles(mol));
    EXPECT_TRUE(isIsomorphic(mol, back)) << s << " -> " << writeSmiles(mol);
  }
}

TEST(Isomorphism, DistinguishesNonIsomorphicGraphs) {
  EXPECT_FALSE(isIsomorphic(parseSmiles("CCCC"), parseSmiles("CC(C)C")));
  EXPECT_FALSE(isIsomorphic(parseSmiles("C1CCCCC1"), parseSmiles("C1CC1C1CC1")));
  EXPECT_TRUE(isIsomorphic(parseSmiles("OCC"), parseSmiles("CCO")));
  EXPECT_FALSE(isIsomorphic(parseSmiles("C=CC"), parseSmiles("CCC")));
}

TEST(Substructure, FindsScaffold) {
  EXPECT_TRUE(hasSubstructure(parseSmiles("Cc1ccccc1O"), parseSmiles("c1ccccc1")));
  EXPECT_FALSE(hasSubstructure(parseSmiles("C1CCCCC1"), parseSmiles("c1ccccc1")));
  EXPECT_TRUE(hasSubstructure(parseSmiles("CCCO"), parseSmiles("CO")));
}

TEST(Tensors, Methane) {
  const auto t = toTensors(parseSmiles("C"));
  ASSERT_EQ(t.X.rows(), 1);
  ASSERT_EQ(t.X.cols(), static_cast<Eigen::Index>(kAtomFeatureDim));
  EXPECT_EQ(t.X(0, static_cast<Eigen::Index>(Element::C)), 1.0);
  EXPECT_EQ(t.X.row(0).head(kNumElements).sum(), 1.0);
  ASSERT_EQ(t.A.rows(), 1);
  EXPECT_EQ(t.A(0, 0), 0.0);
}

TEST(Tensors, Ethane) {
  const auto t = toTensors(parseSmiles("CC"));
  Eigen::Matrix2d expected;
  expected << 0, 1, 1, 0;
  EXPECT_EQ(t.A, expected);
}

TEST(Tensors, BenzeneRingEntriesAreAromatic) {
  const auto t = toTensors(parseSmiles("c1ccccc1"));
  // Hand-enumerated ring bonds: (0,1),(1,2),(2,3),(3,4),(4,5),(5,0).
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(6, 6);
  for (int i = 0; i < 6; ++i) {
    expected(i, (i + 1) % 6) = 1.5;
    expected((i + 1) % 6, i) = 1.5;
  }
  EXPECT_EQ(t.A, expected);
  EXPECT_EQ(t.A, t.A.transpose());
}

TEST(Tensors, TooManyAtoms) {
  const std::string big(39, 'C');
  EXPECT_THROW((void)toTensors(parseSmiles(big)), Error);
  EXPECT_NO_THROW((void)toTensors(parseSmiles(big), 40));
}

TEST(Tensors, InverseRecoversMolecule) {
  for (const auto& s : {"CCO", "c1ccccc1C(=O)O", "C#CC=C", "C[N+](=O)[O-]"}) {
    const auto mol = parseSmiles(s);
    EXPECT_TRUE(isIsomorphic(mol, fromTensors(toTensors(mol)))) << s;
  }
}

TEST(SmilesList, SkipsCommentsAndReadsNames) {
  const auto recs = parseSmilesList("# header\nCCO\tethanol\n\nC\n  # indented comment\nc1ccccc1\tbenzene\r\n");
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].name, "ethanol");
  EXPECT_EQ(recs[1].smiles, "C");
  EXPECT_EQ(recs[1].name, "");
  EXPECT_EQ(recs[2].name, "benzene");
  EXPECT_EQ(recs[2].line, 6u);
}

TEST(Corpus, AllRecordsParseAndRoundTrip) {
  const auto mols = loadMolecules(std::string(VSCREEN_DATA_DIR) + "/corpus.smi");
  ASSERT_GE(mols.size(), 500u);
  std::mt19937_64 rng(5);
  for (const auto& mol : mols) {
    const auto text = writeSmiles(mol);
    ASSERT_TRUE(isIsomorphic(mol, parseSmiles(text))) << mol.name() << " " << text;
    const auto perm = randomPermutation(mol.numAtoms(), rng);
    ASSERT_EQ(writeSmiles(mol.permuted(perm)), text) << mol.name();
  }
}
