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

// Brute-force reference implementations. These deliberately share no code with
// the library paths they check.

#ifndef VSCREEN_TESTS_ORACLES_HPP
#define VSCREEN_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "vscreen/chem.hpp"

namespace oracle {

inline double tanimoto(const std::vector<int>& a, const std::vector<int>& b) {
  std::set<int> sa(a.begin(), a.end());
  std::set<int> sb(b.begin(), b.end());
  std::set<int> both;
  std::set<int> any;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(both, both.begin()));
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(any, any.begin()));
  if (any.empty()) return 1.0;
  return static_cast<double>(both.size()) / static_cast<double>(any.size());
}

//! Full (|a|+1) x (|b|+1) dynamic-programming table.
inline double editSimilarity(const std::string& a, const std::string& b) {
  const std::size_t                     n = a.size();
  const std::size_t                     m = b.size();
  if (n == 0 && m == 0) return 1.0;
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j]               = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return 1.0 - static_cast<double>(d[n][m]) / static_cast<double>(std::max(n, m));
}

//! WL label histograms with explicit string labels.
inline std::map<std::string, double> wlHistogram(const vscreen::Molecule& mol, int iterations) {
  std::map<std::string, double> hist;
  std::vector<std::string>      labels(mol.numAtoms());
  for (std::size_t i = 0; i < mol.numAtoms(); ++i) {
    const auto& a = mol.atom(i);
    labels[i]     = std::string(vscreen::elementSymbol(a.element)) + "/" + std::to_string(a.charge) + "/" + (a.aromatic ? "ar" : "al");
    hist["0:" + labels[i]] += 1.0;
  }
  for (int it = 1; it <= iterations; ++it) {
    std::vector<std::string> next(mol.numAtoms());
    for (std::size_t i = 0; i < mol.numAtoms(); ++i) {
      std::vector<std::string> nb;
      for (int bi : mol.incidentBonds(i)) {
        const auto& b = mol.bond(static_cast<std::size_t>(bi));
        nb.push_back("[" + std::to_string(static_cast<int>(b.order)) + "]" + labels[static_cast<std::size_t>(b.other(static_cast<int>(i)))]);
      }
      std::sort(nb.begin(), nb.end());
      std::string s = labels[i] + "{";
      for (const auto& x : nb) s += x + ",";
      next[i] = s + "}";
      hist[std::to_string(it) + ":" + next[i]] += 1.0;
    }
    labels = next;
  }
  return hist;
}

inline double wlDot(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  double k = 0.0;
  for (const auto& [label, count] : a) {
    auto it = b.find(label);
    if (it != b.end()) k += count * it->second;
  }
  return k;
}

inline double wlSimilarity(const vscreen::Molecule& a, const vscreen::Molecule& b, int iterations) {
  const auto ha = wlHistogram(a, iterations);
  const auto hb = wlHistogram(b, iterations);
  const double kaa = wlDot(ha, ha);
  const double kbb = wlDot(hb, hb);
  if (kaa == 0.0 && kbb == 0.0) return 1.0;
  if (kaa == 0.0 || kbb == 0.0) return 0.0;
  return wlDot(ha, hb) / std::sqrt(kaa * kbb);
}

//! Optimal assignment cost / n over every permutation (equal-size samples).
inline double assignmentWasserstein(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y) {
  const std::size_t n = x.size();
  std::vector<int>  perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) {
        const double diff = x[i][k] - y[static_cast<std::size_t>(perm[i])][k];
        d2 += diff * diff;
      }
      cost += std::sqrt(d2);
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n  = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double       sab = 0.0;
  double       saa = 0.0;
  double       sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

//! Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size();) {
      std::size_t j = k;
      while (j < idx.size() && v[idx[j]] == v[idx[k]]) ++j;
      for (std::size_t t = k; t < j; ++t) r[idx[t]] = 0.5 * static_cast<double>(k + j - 1);
      k = j;
    }
    return r;
  };
  return pearson(ranks(a), ranks(b));
}

}  // namespace oracle

#endif  // VSCREEN_TESTS_ORACLES_HPP
