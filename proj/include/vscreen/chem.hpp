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

#ifndef VSCREEN_CHEM_HPP
#define VSCREEN_CHEM_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vscreen/errors.hpp"

namespace vscreen {

//! Fixed element vocabulary. The enumerator value is the one-hot column in GraphTensors::X.
enum class Element : std::uint8_t { C = 0, N, O, F, S, P, Cl, Br, I, H };

inline constexpr std::size_t kNumElements = 10;

std::string_view elementSymbol(Element e);
std::optional<Element> elementFromSymbol(std::string_view symbol);
//! Largest valence of an element at the given formal charge.
int maxValence(Element e, int charge);
//! Smallest default valence that accommodates `used`, or nullopt when none does.
std::optional<int> defaultValence(Element e, int used);

enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

//! Bond order as a real number: aromatic is 1.5.
double bondOrderValue(BondOrder order);

struct Atom {
  Element element    = Element::C;
  int     charge     = 0;
  int     implicitH  = 0;
  bool    aromatic   = false;

  bool operator==(const Atom&) const = default;
};

struct Bond {
  int       begin = 0;
  int       end   = 0;
  BondOrder order = BondOrder::Single;

  [[nodiscard]] int other(int atom) const { return atom == begin ? end : begin; }
};

//! Atom/bond graph. Construct through MoleculeBuilder or parseSmiles; the
//! invariants (distinct in-range endpoints, no duplicate bonds, valence, aromatic
//! bonds only between aromatic atoms) hold for every instance.
class Molecule {
 public:
  Molecule() = default;

  [[nodiscard]] std::size_t numAtoms() const { return atoms_.size(); }
  [[nodiscard]] std::size_t numBonds() const { return bonds_.size(); }
  [[nodiscard]] std::size_t numHeavyAtoms() const;
  [[nodiscard]] const std::vector<Atom>& atoms() const { return atoms_; }
  [[nodiscard]] const std::vector<Bond>& bonds() const { return bonds_; }
  [[nodiscard]] const Atom& atom(std::size_t i) const { return atoms_[i]; }
  [[nodiscard]] const Bond& bond(std::size_t i) const { return bonds_[i]; }
  //! Indices into bonds() incident on atom i.
  [[nodiscard]] const std::vector<int>& incidentBonds(std::size_t i) const { return incident_[i]; }
  [[nodiscard]] int degree(std::size_t i) const { return static_cast<int>(incident_[i].size()); }
  //! Index of the bond joining a and b, or -1.
  [[nodiscard]] int findBond(int a, int b) const;
  //! Valence consumed by explicit bonds (aromatic bonds count 1, plus 1 for an aromatic atom).
  [[nodiscard]] int bondValence(std::size_t i) const;
  //! Number of independent cycles (bonds - atoms + components).
  [[nodiscard]] int ringCount() const;
  [[nodiscard]] int numComponents() const;

  [[nodiscard]] const std::string& name() const { return name_; }
  void setName(std::string name) { name_ = std::move(name); }

  //! Same molecule with atom i moved to position perm[i].
  [[nodiscard]] Molecule permuted(std::span<const int> perm) const;

 private:
  friend class MoleculeBuilder;
  std::vector<Atom>             atoms_;
  std::vector<Bond>             bonds_;
  std::vector<std::vector<int>> incident_;
  std::string                   name_;
};

class MoleculeBuilder {
 public:
  int  addAtom(const Atom& atom);
  void addBond(int a, int b, BondOrder order);
  [[nodiscard]] std::size_t numAtoms() const { return atoms_.size(); }
  [[nodiscard]] Atom& atom(std::size_t i) { return atoms_[i]; }
  [[nodiscard]] bool hasBond(int a, int b) const;
  //! Sum of explicit bond valence at atom i so far.
  [[nodiscard]] int bondValence(int i) const;

  //! Recompute implicit hydrogens from the default valence table for the given atoms.
  void assignDefaultHydrogens(std::span<const int> atomIndices);

  //! Validates every invariant; throws Error(InvalidMolecule / ValenceViolation).
  [[nodiscard]] Molecule build(std::string name = {}) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
};

//! Implicit H count an organic-subset (unbracketed) atom would receive.
std::optional<int> defaultImplicitHydrogens(const Atom& atom, int bondValence);

// ---------------------------------------------------------------------------
// SMILES

//! Parses SMILES: organic subset, bracket atoms (charge, H count), bond orders,
//! branches, ring closures (digits and %nn), aromatic lowercase atoms, '.' separators.
//! Stereochemistry and isotopes are rejected.
Molecule parseSmiles(std::string_view input);

//! Canonical SMILES. Permutation-invariant; parseSmiles(writeSmiles(m)) is isomorphic to m.
std::string writeSmiles(const Molecule& mol);

//! Canonical atom ranks (0..n-1), the order writeSmiles traverses.
std::vector<int> canonicalRanks(const Molecule& mol);

struct SmilesRecord {
  std::string smiles;
  std::string name;
  std::size_t line = 0;
};

//! Reads a SMILES list: one record per line, optional tab-separated name, '#' comments.
std::vector<SmilesRecord> readSmilesFile(const std::string& path);
std::vector<SmilesRecord> parseSmilesList(std::string_view text);
//! Parses every record; unnamed records get "mol<line>" names.
std::vector<Molecule> loadMolecules(const std::string& path);

// ---------------------------------------------------------------------------
// Graph matching

//! Full graph isomorphism over element, charge, aromaticity, H count and bond order.
bool isIsomorphic(const Molecule& a, const Molecule& b);
//! True when `pattern` maps injectively into `mol` preserving atom labels and bond orders
//! (non-induced subgraph monomorphism). Implicit hydrogens are ignored.
bool hasSubstructure(const Molecule& mol, const Molecule& pattern);

// ---------------------------------------------------------------------------
// Tensors

inline constexpr std::size_t kAtomFeatureDim = kNumElements + 2;  // one-hot, charge, aromatic
inline constexpr std::size_t kDefaultMaxAtoms = 38;

struct GraphTensors {
  Eigen::MatrixXd X;  //!< n x kAtomFeatureDim
  Eigen::MatrixXd A;  //!< n x n bond orders, aromatic = 1.5
};

GraphTensors toTensors(const Molecule& mol, std::size_t maxAtoms = kDefaultMaxAtoms);
//! Exact inverse of toTensors (implicit hydrogens recomputed from the default table).
Molecule fromTensors(const GraphTensors& tensors);

}  // namespace vscreen

#endif  // VSCREEN_CHEM_HPP
