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
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "vscreen/chem.hpp"

namespace vscreen {

namespace {

struct RingOpen {
  int                      atom;
  std::optional<BondOrder> order;
  std::size_t              position;
};

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : text_(text) {}

  Molecule parse() {
    if (text_.empty()) throw Error(ErrorCode::InvalidArgument, "empty SMILES", 0);
    int                      prev = -1;
    std::optional<BondOrder> pendingBond;
    std::size_t              pendingPos = 0;
    std::vector<std::pair<int, std::size_t>> branchStack;

    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(') {
        if (prev < 0 || pendingBond) throw Error(ErrorCode::InvalidMolecule, "branch without preceding atom", pos_);
        branchStack.emplace_back(prev, pos_);
        ++pos_;
        expectAtomOrBond_ = true;
        continue;
      }
      if (c == ')') {
        if (branchStack.empty()) throw Error(ErrorCode::UnbalancedBracket, "unmatched ')'", pos_);
        if (pendingBond || expectAtomOrBond_) throw Error(ErrorCode::InvalidMolecule, "empty branch or dangling bond", pos_);
        prev = branchStack.back().first;
        branchStack.pop_back();
        ++pos_;
        continue;
      }
      if (c == '.') {
        if (pendingBond || prev < 0) throw Error(ErrorCode::InvalidMolecule, "misplaced '.'", pos_);
        prev = -1;
        ++pos_;
        continue;
      }
      if (c == '-' || c == '=' || c == '#' || c == ':') {
        if (pendingBond || prev < 0) throw Error(ErrorCode::InvalidMolecule, "misplaced bond symbol", pos_);
        pendingBond = c == '-' ? BondOrder::Single
                    : c == '=' ? BondOrder::Double
                    : c == '#' ? BondOrder::Triple
                               : BondOrder::Aromatic;
        pendingPos = pos_;
        ++pos_;
        continue;
      }
      if (c == '/' || c == '\\') throw Error(ErrorCode::Unsupported, "bond stereochemistry is not supported", pos_);
      if (c == '$') throw Error(ErrorCode::Unsupported, "quadruple bonds are not supported", pos_);
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        if (prev < 0) throw Error(ErrorCode::InvalidMolecule, "ring closure without atom", pos_);
        const std::size_t start = pos_;
        const int         label = readRingLabel();
        handleRing(prev, label, pendingBond, start);
        pendingBond.reset();
        continue;
      }
      // atom
      const std::size_t atomPos = pos_;
      const int         atom    = c == '[' ? readBracketAtom() : readOrganicAtom();
      if (prev >= 0) {
        addBond(prev, atom, pendingBond, pendingBond ? pendingPos : atomPos);
      } else if (pendingBond) {
        throw Error(ErrorCode::InvalidMolecule, "bond without preceding atom", pendingPos);
      }
      pendingBond.reset();
      expectAtomOrBond_ = false;
      prev              = atom;
    }
    if (pendingBond) throw Error(ErrorCode::InvalidMolecule, "dangling bond", pendingPos);
    if (!branchStack.empty()) throw Error(ErrorCode::UnbalancedBracket, "unclosed branch opened at " + std::to_string(branchStack.back().second), text_.size());
    if (!openRings_.empty()) {
      const auto& first = std::min_element(openRings_.begin(), openRings_.end(), [](const auto& a, const auto& b) {
                            return a.second.position < b.second.position;
                          })->second;
      throw Error(ErrorCode::UnclosedRing, "unclosed ring bond", first.position);
    }

    builder_.assignDefaultHydrogens(organic_);
    for (int i : organic_) {
      if (!defaultImplicitHydrogens(builder_.atom(static_cast<std::size_t>(i)), builder_.bondValence(i))) {
        throw Error(ErrorCode::ValenceViolation, "atom exceeds every allowed valence", atomPositions_[static_cast<std::size_t>(i)]);
      }
    }
    try {
      return builder_.build();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ValenceViolation) {
        // Attribute to the first atom that fails.
        for (std::size_t i = 0; i < builder_.numAtoms(); ++i) {
          const auto& atom = builder_.atom(i);
          const int   used = builder_.bondValence(static_cast<int>(i)) + atom.implicitH - (atom.aromatic ? 1 : 0);
          if (used > maxValence(atom.element, atom.charge)) {
            throw Error(ErrorCode::ValenceViolation, "atom exceeds its maximum valence", atomPositions_[i]);
          }
        }
      }
      throw Error(e.code(), e.what(), text_.size() - 1);
    }
  }

 private:
  int readRingLabel() {
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
        throw Error(ErrorCode::InvalidMolecule, "'%' must be followed by two digits", pos_);
      }
      const int label = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
      return label;
    }
    return text_[pos_++] - '0';
  }

  void handleRing(int atom, int label, std::optional<BondOrder> order, std::size_t position) {
    auto it = openRings_.find(label);
    if (it == openRings_.end()) {
      openRings_.emplace(label, RingOpen{atom, order, position});
      return;
    }
    const RingOpen open = it->second;
    openRings_.erase(it);
    if (open.atom == atom) throw Error(ErrorCode::InvalidMolecule, "ring closure to the same atom", position);
    if (open.order && order && *open.order != *order) {
      throw Error(ErrorCode::InvalidMolecule, "conflicting ring-closure bond orders", position);
    }
    addBond(open.atom, atom, open.order ? open.order : order, position);
  }

  void addBond(int a, int b, std::optional<BondOrder> order, std::size_t position) {
    if (builder_.hasBond(a, b)) throw Error(ErrorCode::InvalidMolecule, "duplicate bond", position);
    const bool bothAromatic = builder_.atom(static_cast<std::size_t>(a)).aromatic && builder_.atom(static_cast<std::size_t>(b)).aromatic;
    BondOrder  resolved     = order.value_or(bothAromatic ? BondOrder::Aromatic : BondOrder::Single);
    if (resolved == BondOrder::Aromatic && !bothAromatic) {
      throw Error(ErrorCode::InvalidMolecule, "aromatic bond between non-aromatic atoms", position);
    }
    builder_.addBond(a, b, resolved);
  }

  int readOrganicAtom() {
    const std::size_t start = pos_;
    const char        c     = text_[pos_];
    Atom              atom;
    std::string_view  symbol;
    if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') {
      symbol = "Cl";
    } else if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') {
      symbol = "Br";
    } else {
      symbol = text_.substr(pos_, 1);
    }
    switch (c) {
      case 'C': case 'N': case 'O': case 'S': case 'P': case 'F': case 'I':
        break;
      case 'B':
        if (symbol != "Br") throw Error(ErrorCode::UnknownElement, "element 'B' is outside the vocabulary", start);
        break;
      case 'c': case 'n': case 'o': case 's': case 'p':
        atom.aromatic = true;
        symbol        = std::string_view(&kUpper[std::string_view("cnosp").find(c)], 1);
        break;
      default:
        throw Error(ErrorCode::UnknownElement, std::string("unexpected character '") + c + "'", start);
    }
    auto element = elementFromSymbol(symbol);
    if (!element) throw Error(ErrorCode::UnknownElement, "unknown element", start);
    atom.element = *element;
    pos_ += (symbol.size() == 2 && !atom.aromatic) ? 2 : 1;
    const int index = builder_.addAtom(atom);
    organic_.push_back(index);
    atomPositions_.push_back(start);
    return index;
  }

  int readBracketAtom() {
    const std::size_t open = pos_;
    ++pos_;
    auto at = [&](std::size_t p) -> char { return p < text_.size() ? text_[p] : '\0'; };
    if (std::isdigit(static_cast<unsigned char>(at(pos_)))) throw Error(ErrorCode::Unsupported, "isotopes are not supported", pos_);
    Atom atom;
    const std::size_t symStart = pos_;
    std::string       symbol;
    const char        c = at(pos_);
    if (c >= 'a' && c <= 'z') {
      if (std::string_view("cnosp").find(c) == std::string_view::npos) {
        throw Error(ErrorCode::UnknownElement, "unknown aromatic element", pos_);
      }
      atom.aromatic = true;
      symbol        = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      ++pos_;
    } else if (c >= 'A' && c <= 'Z') {
      symbol = c;
      ++pos_;
      if (std::islower(static_cast<unsigned char>(at(pos_))) && elementFromSymbol(symbol + at(pos_))) {
        symbol += at(pos_);
        ++pos_;
      } else if (std::islower(static_cast<unsigned char>(at(pos_)))) {
        throw Error(ErrorCode::UnknownElement, "unknown element '" + symbol + at(pos_) + "'", symStart);
      }
    } else if (c == '\0') {
      throw Error(ErrorCode::UnbalancedBracket, "unterminated bracket atom", text_.size());
    } else {
      throw Error(ErrorCode::UnknownElement, "missing element symbol", pos_);
    }
    auto element = elementFromSymbol(symbol);
    if (!element) throw Error(ErrorCode::UnknownElement, "unknown element '" + symbol + "'", symStart);
    atom.element = *element;
    if (at(pos_) == '@') throw Error(ErrorCode::Unsupported, "chirality is not supported", pos_);
    if (at(pos_) == 'H') {
      ++pos_;
      atom.implicitH = 1;
      if (std::isdigit(static_cast<unsigned char>(at(pos_)))) atom.implicitH = at(pos_++) - '0';
    }
    if (at(pos_) == '+' || at(pos_) == '-') {
      const char sign = at(pos_++);
      int        mag  = 1;
      if (std::isdigit(static_cast<unsigned char>(at(pos_)))) {
        mag = at(pos_++) - '0';
      } else {
        while (at(pos_) == sign) {
          ++mag;
          ++pos_;
        }
      }
      atom.charge = sign == '+' ? mag : -mag;
    }
    if (at(pos_) == ':') throw Error(ErrorCode::Unsupported, "atom classes are not supported", pos_);
    if (at(pos_) != ']') {
      if (at(pos_) == '\0') throw Error(ErrorCode::UnbalancedBracket, "unterminated bracket atom opened at " + std::to_string(open), text_.size());
      throw Error(ErrorCode::UnbalancedBracket, std::string("unexpected '") + at(pos_) + "' in bracket atom", pos_);
    }
    ++pos_;
    atomPositions_.push_back(open);
    return builder_.addAtom(atom);
  }

  static constexpr char kUpper[] = "CNOSP";

  std::string_view              text_;
  std::size_t                   pos_ = 0;
  bool                          expectAtomOrBond_ = false;
  MoleculeBuilder               builder_;
  std::vector<int>              organic_;
  std::vector<std::size_t>      atomPositions_;
  std::map<int, RingOpen>       openRings_;
};

// ---------------------------------------------------------------------------
// Canonical ranking

using Ranks = std::vector<int>;

Ranks rankByKeys(const std::vector<std::vector<int>>& keys) {
  std::vector<int> order(keys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)]; });
  Ranks ranks(keys.size());
  int   current = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && keys[static_cast<std::size_t>(order[k])] != keys[static_cast<std::size_t>(order[k - 1])]) current = static_cast<int>(k);
    ranks[static_cast<std::size_t>(order[k])] = current;
  }
  return ranks;
}

int countClasses(const Ranks& ranks) {
  std::vector<int> sorted(ranks);
  std::sort(sorted.begin(), sorted.end());
  return static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

//! Iterative neighborhood refinement until the partition stops splitting.
Ranks refine(const Molecule& mol, Ranks ranks) {
  const auto n = mol.numAtoms();
  int classes  = countClasses(ranks);
  while (true) {
    std::vector<std::vector<int>> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<int, int>> nbrs;
      for (int bi : mol.incidentBonds(i)) {
        const auto& b = mol.bond(static_cast<std::size_t>(bi));
        nbrs.emplace_back(ranks[static_cast<std::size_t>(b.other(static_cast<int>(i)))], static_cast<int>(b.order));
      }
      std::sort(nbrs.begin(), nbrs.end());
      keys[i].push_back(ranks[i]);
      for (auto [r, o] : nbrs) {
        keys[i].push_back(r);
        keys[i].push_back(o);
      }
    }
    Ranks next   = rankByKeys(keys);
    int   nextCl = countClasses(next);
    if (nextCl == classes) return next;
    ranks   = std::move(next);
    classes = nextCl;
  }
}

Ranks initialRanks(const Molecule& mol) {
  std::vector<std::vector<int>> keys(mol.numAtoms());
  for (std::size_t i = 0; i < mol.numAtoms(); ++i) {
    const auto& a = mol.atom(i);
    int bondSum = 0;
    for (int bi : mol.incidentBonds(i)) bondSum += static_cast<int>(mol.bond(static_cast<std::size_t>(bi)).order);
    keys[i] = {static_cast<int>(a.element), a.charge, a.aromatic ? 1 : 0, a.implicitH, mol.degree(i), bondSum};
  }
  return rankByKeys(keys);
}

std::string atomToken(const Molecule& mol, std::size_t i) {
  const auto& a      = mol.atom(i);
  const auto  defH   = defaultImplicitHydrogens(a, mol.bondValence(i));
  std::string symbol(elementSymbol(a.element));
  if (a.aromatic) symbol[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[0])));
  if (defH && *defH == a.implicitH) return symbol;
  std::string out = "[" + symbol;
  if (a.implicitH > 0) {
    out += 'H';
    if (a.implicitH > 1) out += std::to_string(a.implicitH);
  }
  if (a.charge != 0) {
    out += a.charge > 0 ? '+' : '-';
    if (std::abs(a.charge) > 1) out += std::to_string(std::abs(a.charge));
  }
  return out + "]";
}

std::string bondToken(const Molecule& mol, const Bond& b) {
  switch (b.order) {
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    case BondOrder::Aromatic: return "";
    case BondOrder::Single:
      return mol.atom(static_cast<std::size_t>(b.begin)).aromatic && mol.atom(static_cast<std::size_t>(b.end)).aromatic ? "-" : "";
  }
  return "";
}

std::string ringLabel(int d) { return d < 10 ? std::to_string(d) : "%" + std::to_string(d); }

//! Emits SMILES for a fully discriminating rank vector.
std::string emitSmiles(const Molecule& mol, const Ranks& ranks) {
  const auto n = mol.numAtoms();
  std::vector<std::vector<int>> sortedNbrBonds(n);
  for (std::size_t i = 0; i < n; ++i) {
    sortedNbrBonds[i] = mol.incidentBonds(i);
    std::sort(sortedNbrBonds[i].begin(), sortedNbrBonds[i].end(), [&](int x, int y) {
      return ranks[static_cast<std::size_t>(mol.bond(static_cast<std::size_t>(x)).other(static_cast<int>(i)))] <
             ranks[static_cast<std::size_t>(mol.bond(static_cast<std::size_t>(y)).other(static_cast<int>(i)))];
    });
  }

  // Pass 1: DFS tree and ring-closure bonds.
  std::vector<int>              order(n);
  std::vector<int>              visitOrder(n, -1);
  std::vector<std::vector<int>> children(n);
  std::vector<bool>             isTreeBond(mol.numBonds(), false);
  std::vector<int>              roots;
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  // Roots start at the lowest-ranked atom of minimum degree, so chains begin at a terminus.
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::pair(mol.degree(static_cast<std::size_t>(a)), ranks[static_cast<std::size_t>(a)]) <
           std::pair(mol.degree(static_cast<std::size_t>(b)), ranks[static_cast<std::size_t>(b)]);
  });
  int counter = 0;
  for (int root : order) {
    if (visitOrder[static_cast<std::size_t>(root)] >= 0) continue;
    roots.push_back(root);
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    visitOrder[static_cast<std::size_t>(root)] = counter++;
    while (!stack.empty()) {
      auto& [atom, next] = stack.back();
      const auto& nb     = sortedNbrBonds[static_cast<std::size_t>(atom)];
      if (next >= nb.size()) {
        stack.pop_back();
        continue;
      }
      const int bi    = nb[next++];
      const int other = mol.bond(static_cast<std::size_t>(bi)).other(atom);
      if (visitOrder[static_cast<std::size_t>(other)] < 0) {
        visitOrder[static_cast<std::size_t>(other)] = counter++;
        isTreeBond[static_cast<std::size_t>(bi)]     = true;
        children[static_cast<std::size_t>(atom)].push_back(bi);
        stack.emplace_back(other, 0);
      }
    }
  }

  // Pass 2: emission.
  std::vector<int>  ringDigit(mol.numBonds(), 0);
  std::vector<bool> digitInUse(100, false);
  std::string       out;
  auto writeAtom = [&](auto&& self, int atom) -> void {
    out += atomToken(mol, static_cast<std::size_t>(atom));
    std::vector<int> toFree;
    // Closings first, then openings; both in neighbor-rank order.
    for (int pass = 0; pass < 2; ++pass) {
      for (int bi : sortedNbrBonds[static_cast<std::size_t>(atom)]) {
        if (isTreeBond[static_cast<std::size_t>(bi)]) continue;
        const int other   = mol.bond(static_cast<std::size_t>(bi)).other(atom);
        const bool closes = ringDigit[static_cast<std::size_t>(bi)] > 0;
        if (pass == 0 && closes) {
          out += ringLabel(ringDigit[static_cast<std::size_t>(bi)]);
          toFree.push_back(ringDigit[static_cast<std::size_t>(bi)]);
        } else if (pass == 1 && !closes && visitOrder[static_cast<std::size_t>(other)] > visitOrder[static_cast<std::size_t>(atom)]) {
          int d = 1;
          while (digitInUse[static_cast<std::size_t>(d)]) ++d;
          digitInUse[static_cast<std::size_t>(d)]    = true;
          ringDigit[static_cast<std::size_t>(bi)]    = d;
          out += bondToken(mol, mol.bond(static_cast<std::size_t>(bi)));
          out += ringLabel(d);
        }
      }
    }
    for (int d : toFree) digitInUse[static_cast<std::size_t>(d)] = false;
    const auto& kids = children[static_cast<std::size_t>(atom)];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const auto& b     = mol.bond(static_cast<std::size_t>(kids[k]));
      const bool  last  = k + 1 == kids.size();
      if (!last) out += '(';
      out += bondToken(mol, b);
      self(self, b.other(atom));
      if (!last) out += ')';
    }
  };
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (r > 0) out += '.';
    writeAtom(writeAtom, roots[r]);
  }
  return out;
}

struct CanonicalSearch {
  const Molecule& mol;
  int             leaves      = 0;
  static constexpr int kLeafBudget = 2048;
  std::string     best;
  Ranks           bestRanks;

  void run(const Ranks& ranks) {
    const int n = static_cast<int>(ranks.size());
    if (countClasses(ranks) == n) {
      ++leaves;
      std::string s = emitSmiles(mol, ranks);
      if (best.empty() || s < best) {
        best      = std::move(s);
        bestRanks = ranks;
      }
      return;
    }
    // Smallest rank value shared by more than one atom.
    std::map<int, std::vector<int>> classes;
    for (int i = 0; i < n; ++i) classes[ranks[static_cast<std::size_t>(i)]].push_back(i);
    const std::vector<int>* tied = nullptr;
    int                     tiedRank = 0;
    for (const auto& [r, members] : classes) {
      if (members.size() > 1) {
        tied     = &members;
        tiedRank = r;
        break;
      }
    }
    // Terminal atoms on a common neighbor with equal labels are interchangeable.
    bool interchangeable = true;
    int  anchor          = -1;
    for (int a : *tied) {
      if (mol.degree(static_cast<std::size_t>(a)) != 1) {
        interchangeable = false;
        break;
      }
      const int nb = mol.bond(static_cast<std::size_t>(mol.incidentBonds(static_cast<std::size_t>(a))[0])).other(a);
      if (anchor >= 0 && nb != anchor) {
        interchangeable = false;
        break;
      }
      anchor = nb;
    }
    for (std::size_t k = 0; k < tied->size(); ++k) {
      if (k > 0 && (interchangeable || leaves >= kLeafBudget)) break;
      Ranks next(ranks);
      for (int i = 0; i < n; ++i) {
        next[static_cast<std::size_t>(i)] = 2 * ranks[static_cast<std::size_t>(i)] + (ranks[static_cast<std::size_t>(i)] > tiedRank ? 1 : 0);
      }
      for (int a : *tied) next[static_cast<std::size_t>(a)] = 2 * tiedRank + 1;
      next[static_cast<std::size_t>((*tied)[k])] = 2 * tiedRank;
      run(refine(mol, rankByKeys([&] {
            std::vector<std::vector<int>> keys(next.size());
            for (std::size_t i = 0; i < next.size(); ++i) keys[i] = {next[i]};
            return keys;
          }())));
    }
  }
};

CanonicalSearch& canonicalize(CanonicalSearch& search) {
  if (search.mol.numAtoms() == 0) return search;
  search.run(refine(search.mol, initialRanks(search.mol)));
  return search;
}

}  // namespace

Molecule parseSmiles(std::string_view input) {
  SmilesParser parser(input);
  return parser.parse();
}

std::string writeSmiles(const Molecule& mol) {
  CanonicalSearch search{mol, 0, {}, {}};
  return canonicalize(search).best;
}

std::vector<int> canonicalRanks(const Molecule& mol) {
  CanonicalSearch search{mol, 0, {}, {}};
  return canonicalize(search).bestRanks;
}

// ---------------------------------------------------------------------------

std::vector<SmilesRecord> parseSmilesList(std::string_view text) {
  std::vector<SmilesRecord> records;
  std::size_t               lineNo = 0;
  std::size_t               start  = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++lineNo;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto trim = [](std::string_view s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
      return s;
    };
    std::string_view trimmed = trim(line);
    if (trimmed.empty() || trimmed.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    SmilesRecord rec;
    rec.line = lineNo;
    const auto tab = trimmed.find('\t');
    if (tab == std::string_view::npos) {
      rec.smiles = std::string(trimmed);
    } else {
      rec.smiles = std::string(trim(trimmed.substr(0, tab)));
      rec.name   = std::string(trim(trimmed.substr(tab + 1)));
    }
    records.push_back(std::move(rec));
    if (end == text.size()) break;
  }
  return records;
}

std::vector<SmilesRecord> readSmilesFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parseSmilesList(buffer.str());
}

std::vector<Molecule> loadMolecules(const std::string& path) {
  std::vector<Molecule> mols;
  for (const auto& rec : readSmilesFile(path)) {
    Molecule mol;
    try {
      mol = parseSmiles(rec.smiles);
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(rec.line) + ": " + e.what());
    }
    mol.setName(rec.name.empty() ? "mol" + std::to_string(rec.line) : rec.name);
    mols.push_back(std::move(mol));
  }
  return mols;
}

}  // namespace vscreen
