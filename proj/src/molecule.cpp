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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "vscreen/chem.hpp"

namespace vscreen {

namespace {

constexpr std::array<std::string_view, kNumElements> kSymbols = {"C", "N", "O", "F", "S", "P", "Cl", "Br", "I", "H"};

bool canBeAromatic(Element e) {
  return e == Element::C || e == Element::N || e == Element::O || e == Element::S || e == Element::P;
}

std::span<const int> defaultValences(Element e) {
  static constexpr int kC[]  = {4};
  static constexpr int kN[]  = {3};
  static constexpr int kO[]  = {2};
  static constexpr int kS[]  = {2, 4, 6};
  static constexpr int kP[]  = {3, 5};
  static constexpr int kX1[] = {1};
  switch (e) {
    case Element::C: return kC;
    case Element::N: return kN;
    case Element::O: return kO;
    case Element::S: return kS;
    case Element::P: return kP;
    default: return kX1;
  }
}

}  // namespace

std::string_view elementSymbol(Element e) { return kSymbols[static_cast<std::size_t>(e)]; }

std::optional<Element> elementFromSymbol(std::string_view symbol) {
  for (std::size_t i = 0; i < kSymbols.size(); ++i) {
    if (kSymbols[i] == symbol) return static_cast<Element>(i);
  }
  return std::nullopt;
}

int maxValence(Element e, int charge) {
  int v = 0;
  switch (e) {
    case Element::C: v = 4 - std::abs(charge); break;
    case Element::H: v = 1 - std::abs(charge); break;
    default: v = defaultValences(e).back() + charge; break;
  }
  return std::max(v, 0);
}

std::optional<int> defaultValence(Element e, int used) {
  for (int v : defaultValences(e)) {
    if (v >= used) return v;
  }
  return std::nullopt;
}

double bondOrderValue(BondOrder order) {
  switch (order) {
    case BondOrder::Single: return 1.0;
    case BondOrder::Double: return 2.0;
    case BondOrder::Triple: return 3.0;
    case BondOrder::Aromatic: return 1.5;
  }
  return 0.0;
}

std::optional<int> defaultImplicitHydrogens(const Atom& atom, int bondValence) {
  if (atom.charge != 0 || atom.element == Element::H) return std::nullopt;
  const auto valences = defaultValences(atom.element);
  const auto exact    = [&](int used) { return std::find(valences.begin(), valences.end(), used) != valences.end(); };
  if (atom.aromatic) {
    // bondValence includes one for the aromatic system; a pi donor (o, s, pyrrole-type n)
    // does not need it.
    if (exact(bondValence)) return 0;
    if (exact(bondValence - 1)) return 0;
  }
  auto v = defaultValence(atom.element, bondValence);
  if (!v) return std::nullopt;
  return *v - bondValence;
}

// ---------------------------------------------------------------------------

std::size_t Molecule::numHeavyAtoms() const {
  return static_cast<std::size_t>(
      std::count_if(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.element != Element::H; }));
}

int Molecule::findBond(int a, int b) const {
  for (int bi : incident_[static_cast<std::size_t>(a)]) {
    if (bonds_[static_cast<std::size_t>(bi)].other(a) == b) return bi;
  }
  return -1;
}

int Molecule::bondValence(std::size_t i) const {
  int  used     = 0;
  bool anyArom  = false;
  for (int bi : incident_[i]) {
    const auto order = bonds_[static_cast<std::size_t>(bi)].order;
    if (order == BondOrder::Aromatic) {
      used += 1;
      anyArom = true;
    } else {
      used += static_cast<int>(order);
    }
  }
  if (atoms_[i].aromatic && anyArom) used += 1;
  return used;
}

int Molecule::numComponents() const {
  std::vector<int> parent(atoms_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  int components = static_cast<int>(atoms_.size());
  for (const auto& b : bonds_) {
    const int ra = find(b.begin);
    const int rb = find(b.end);
    if (ra != rb) {
      parent[static_cast<std::size_t>(ra)] = rb;
      --components;
    }
  }
  return components;
}

int Molecule::ringCount() const {
  return static_cast<int>(bonds_.size()) - static_cast<int>(atoms_.size()) + numComponents();
}

Molecule Molecule::permuted(std::span<const int> perm) const {
  if (perm.size() != atoms_.size()) throw Error(ErrorCode::InvalidArgument, "permutation size mismatch");
  MoleculeBuilder builder;
  std::vector<Atom> reordered(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) reordered[static_cast<std::size_t>(perm[i])] = atoms_[i];
  for (const auto& a : reordered) builder.addAtom(a);
  // Bond order is also shuffled deterministically by the new endpoint indices.
  std::vector<Bond> bonds;
  bonds.reserve(bonds_.size());
  for (const auto& b : bonds_) bonds.push_back({perm[static_cast<std::size_t>(b.begin)], perm[static_cast<std::size_t>(b.end)], b.order});
  std::sort(bonds.begin(), bonds.end(), [](const Bond& x, const Bond& y) {
    return std::minmax(x.begin, x.end) < std::minmax(y.begin, y.end);
  });
  for (const auto& b : bonds) builder.addBond(b.begin, b.end, b.order);
  return builder.build(name_);
}

// ---------------------------------------------------------------------------

int MoleculeBuilder::addAtom(const Atom& atom) {
  atoms_.push_back(atom);
  return static_cast<int>(atoms_.size()) - 1;
}

void MoleculeBuilder::addBond(int a, int b, BondOrder order) { bonds_.push_back({a, b, order}); }

bool MoleculeBuilder::hasBond(int a, int b) const {
  return std::any_of(bonds_.begin(), bonds_.end(), [&](const Bond& bond) {
    return (bond.begin == a && bond.end == b) || (bond.begin == b && bond.end == a);
  });
}

int MoleculeBuilder::bondValence(int i) const {
  int  used    = 0;
  bool anyArom = false;
  for (const auto& b : bonds_) {
    if (b.begin != i && b.end != i) continue;
    if (b.order == BondOrder::Aromatic) {
      used += 1;
      anyArom = true;
    } else {
      used += static_cast<int>(b.order);
    }
  }
  if (atoms_[static_cast<std::size_t>(i)].aromatic && anyArom) used += 1;
  return used;
}

void MoleculeBuilder::assignDefaultHydrogens(std::span<const int> atomIndices) {
  for (int i : atomIndices) {
    auto& atom = atoms_[static_cast<std::size_t>(i)];
    auto  h    = defaultImplicitHydrogens(atom, bondValence(i));
    atom.implicitH = h.value_or(0);
  }
}

Molecule MoleculeBuilder::build(std::string name) const {
  Molecule mol;
  mol.atoms_ = atoms_;
  mol.incident_.assign(atoms_.size(), {});
  const int n = static_cast<int>(atoms_.size());
  for (const auto& atom : atoms_) {
    if (atom.implicitH < 0) throw Error(ErrorCode::InvalidMolecule, "negative hydrogen count");
    if (atom.aromatic && !canBeAromatic(atom.element)) {
      throw Error(ErrorCode::InvalidMolecule, "element " + std::string(elementSymbol(atom.element)) + " cannot be aromatic");
    }
  }
  for (const auto& b : bonds_) {
    if (b.begin < 0 || b.end < 0 || b.begin >= n || b.end >= n) {
      throw Error(ErrorCode::InvalidMolecule, "bond endpoint out of range");
    }
    if (b.begin == b.end) throw Error(ErrorCode::InvalidMolecule, "bond endpoints must be distinct");
    if (mol.findBond(b.begin, b.end) >= 0) throw Error(ErrorCode::InvalidMolecule, "duplicate bond");
    if (b.order == BondOrder::Aromatic &&
        !(atoms_[static_cast<std::size_t>(b.begin)].aromatic && atoms_[static_cast<std::size_t>(b.end)].aromatic)) {
      throw Error(ErrorCode::InvalidMolecule, "aromatic bond between non-aromatic atoms");
    }
    const int index = static_cast<int>(mol.bonds_.size());
    mol.bonds_.push_back(b);
    mol.incident_[static_cast<std::size_t>(b.begin)].push_back(index);
    mol.incident_[static_cast<std::size_t>(b.end)].push_back(index);
  }
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const auto& atom = atoms_[i];
    const int   used = mol.bondValence(i) + atom.implicitH - (atom.aromatic ? 1 : 0);
    if (used > maxValence(atom.element, atom.charge)) {
      throw Error(ErrorCode::ValenceViolation, "atom " + std::to_string(i) + " (" + std::string(elementSymbol(atom.element)) +
                                                   ") exceeds its maximum valence");
    }
  }
  mol.name_ = std::move(name);
  return mol;
}

// ---------------------------------------------------------------------------

GraphTensors toTensors(const Molecule& mol, std::size_t maxAtoms) {
  const auto n = mol.numAtoms();
  if (n > maxAtoms) {
    throw Error(ErrorCode::TooManyAtoms, std::to_string(n) + " atoms exceeds maximum of " + std::to_string(maxAtoms));
  }
  GraphTensors t;
  const auto   ni = static_cast<Eigen::Index>(n);
  t.X = Eigen::MatrixXd::Zero(ni, static_cast<Eigen::Index>(kAtomFeatureDim));
  t.A = Eigen::MatrixXd::Zero(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    const auto& atom = mol.atom(static_cast<std::size_t>(i));
    t.X(i, static_cast<Eigen::Index>(atom.element)) = 1.0;
    t.X(i, kNumElements)                             = atom.charge;
    t.X(i, kNumElements + 1)                         = atom.aromatic ? 1.0 : 0.0;
  }
  for (const auto& b : mol.bonds()) {
    const double v   = bondOrderValue(b.order);
    t.A(b.begin, b.end) = v;
    t.A(b.end, b.begin) = v;
  }
  return t;
}

Molecule fromTensors(const GraphTensors& tensors) {
  const auto n = tensors.X.rows();
  if (tensors.A.rows() != n || tensors.A.cols() != n || tensors.X.cols() != static_cast<Eigen::Index>(kAtomFeatureDim)) {
    throw Error(ErrorCode::ShapeMismatch, "tensor shapes disagree");
  }
  MoleculeBuilder builder;
  std::vector<int> all;
  for (Eigen::Index i = 0; i < n; ++i) {
    Atom atom;
    Eigen::Index best = 0;
    tensors.X.row(i).head(kNumElements).maxCoeff(&best);
    atom.element  = static_cast<Element>(best);
    atom.charge   = static_cast<int>(std::lround(tensors.X(i, kNumElements)));
    atom.aromatic = tensors.X(i, kNumElements + 1) > 0.5;
    all.push_back(builder.addAtom(atom));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = tensors.A(i, j);
      if (v == 0.0) continue;
      BondOrder order = BondOrder::Single;
      if (v == 1.5) {
        order = BondOrder::Aromatic;
      } else if (v == 2.0) {
        order = BondOrder::Double;
      } else if (v == 3.0) {
        order = BondOrder::Triple;
      } else if (v != 1.0) {
        throw Error(ErrorCode::InvalidMolecule, "non-integral bond order in tensor");
      }
      builder.addBond(static_cast<int>(i), static_cast<int>(j), order);
    }
  }
  builder.assignDefaultHydrogens(all);
  return builder.build();
}

}  // namespace vscreen
