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

// VF2-style state-space matcher for small molecular graphs.

#include <algorithm>

#include "vscreen/chem.hpp"

namespace vscreen {

namespace {

class Matcher {
 public:
  Matcher(const Molecule& pattern, const Molecule& target, bool induced)
      : pattern_(pattern), target_(target), induced_(induced) {}

  bool run() {
    const auto np = pattern_.numAtoms();
    if (np > target_.numAtoms()) return false;
    core_.assign(np, -1);
    used_.assign(target_.numAtoms(), false);
    buildOrder();
    return extend(0);
  }

 private:
  // Pattern atoms in BFS order so every atom after the first of its component has a
  // mapped neighbor when it is reached.
  void buildOrder() {
    const auto        np = pattern_.numAtoms();
    std::vector<bool> seen(np, false);
    std::vector<int>  starts(np);
    for (std::size_t i = 0; i < np; ++i) starts[i] = static_cast<int>(i);
    // Rarest element first, then highest degree.
    std::stable_sort(starts.begin(), starts.end(), [&](int a, int b) {
      return pattern_.degree(static_cast<std::size_t>(a)) > pattern_.degree(static_cast<std::size_t>(b));
    });
    for (int s : starts) {
      if (seen[static_cast<std::size_t>(s)]) continue;
      std::vector<int> queue{s};
      seen[static_cast<std::size_t>(s)] = true;
      for (std::size_t q = 0; q < queue.size(); ++q) {
        const int a = queue[q];
        order_.push_back(a);
        for (int bi : pattern_.incidentBonds(static_cast<std::size_t>(a))) {
          const int o = pattern_.bond(static_cast<std::size_t>(bi)).other(a);
          if (!seen[static_cast<std::size_t>(o)]) {
            seen[static_cast<std::size_t>(o)] = true;
            queue.push_back(o);
          }
        }
      }
    }
  }

  bool atomsCompatible(int p, int t) const {
    const auto& pa = pattern_.atom(static_cast<std::size_t>(p));
    const auto& ta = target_.atom(static_cast<std::size_t>(t));
    if (pa.element != ta.element || pa.charge != ta.charge || pa.aromatic != ta.aromatic) return false;
    if (induced_) return pa.implicitH == ta.implicitH && pattern_.degree(static_cast<std::size_t>(p)) == target_.degree(static_cast<std::size_t>(t));
    return pattern_.degree(static_cast<std::size_t>(p)) <= target_.degree(static_cast<std::size_t>(t));
  }

  bool feasible(int p, int t) const {
    if (!atomsCompatible(p, t)) return false;
    // Every mapped pattern neighbor must map to a target neighbor with the same bond order.
    int mappedNbrs = 0;
    for (int bi : pattern_.incidentBonds(static_cast<std::size_t>(p))) {
      const auto& b  = pattern_.bond(static_cast<std::size_t>(bi));
      const int   pm = core_[static_cast<std::size_t>(b.other(p))];
      if (pm < 0) continue;
      ++mappedNbrs;
      const int tb = target_.findBond(t, pm);
      if (tb < 0 || target_.bond(static_cast<std::size_t>(tb)).order != b.order) return false;
    }
    if (induced_) {
      int mappedTargetNbrs = 0;
      for (int bi : target_.incidentBonds(static_cast<std::size_t>(t))) {
        if (used_[static_cast<std::size_t>(target_.bond(static_cast<std::size_t>(bi)).other(t))]) ++mappedTargetNbrs;
      }
      if (mappedTargetNbrs != mappedNbrs) return false;
    }
    return true;
  }

  bool extend(std::size_t depth) {
    if (depth == order_.size()) return true;
    const int p = order_[depth];
    // Candidates: neighbors of a mapped neighbor's image, else every unused atom.
    int anchor = -1;
    for (int bi : pattern_.incidentBonds(static_cast<std::size_t>(p))) {
      const int m = core_[static_cast<std::size_t>(pattern_.bond(static_cast<std::size_t>(bi)).other(p))];
      if (m >= 0) {
        anchor = m;
        break;
      }
    }
    auto tryCandidate = [&](int t) {
      if (used_[static_cast<std::size_t>(t)] || !feasible(p, t)) return false;
      core_[static_cast<std::size_t>(p)] = t;
      used_[static_cast<std::size_t>(t)] = true;
      if (extend(depth + 1)) return true;
      core_[static_cast<std::size_t>(p)] = -1;
      used_[static_cast<std::size_t>(t)] = false;
      return false;
    };
    if (anchor >= 0) {
      for (int bi : target_.incidentBonds(static_cast<std::size_t>(anchor))) {
        if (tryCandidate(target_.bond(static_cast<std::size_t>(bi)).other(anchor))) return true;
      }
      return false;
    }
    for (std::size_t t = 0; t < target_.numAtoms(); ++t) {
      if (tryCandidate(static_cast<int>(t))) return true;
    }
    return false;
  }

  const Molecule&   pattern_;
  const Molecule&   target_;
  bool              induced_;
  std::vector<int>  order_;
  std::vector<int>  core_;
  std::vector<bool> used_;
};

}  // namespace

bool isIsomorphic(const Molecule& a, const Molecule& b) {
  if (a.numAtoms() != b.numAtoms() || a.numBonds() != b.numBonds()) return false;
  auto labels = [](const Molecule& m) {
    std::vector<std::tuple<int, int, bool, int, int>> out;
    for (std::size_t i = 0; i < m.numAtoms(); ++i) {
      const auto& at = m.atom(i);
      out.emplace_back(static_cast<int>(at.element), at.charge, at.aromatic, at.implicitH, m.degree(i));
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  if (labels(a) != labels(b)) return false;
  return Matcher(a, b, true).run();
}

bool hasSubstructure(const Molecule& mol, const Molecule& pattern) { return Matcher(pattern, mol, false).run(); }

}  // namespace vscreen
