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

#include "vscreen/similarity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <thread>

namespace vscreen {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hashCombine(std::uint64_t seed, std::uint64_t value) {
  return mix64(seed ^ (value + 0x9E3779B97F4A7C15ULL + (seed << 6) + (seed >> 2)));
}

Fingerprint::Fingerprint(int width, int radius)
    : width_(width), radius_(radius), words_(static_cast<std::size_t>((width + 63) / 64), 0) {}

int Fingerprint::popcount() const {
  int count = 0;
  for (auto w : words_) count += std::popcount(w);
  return count;
}

std::vector<int> Fingerprint::onBits() const {
  std::vector<int> bits;
  for (int i = 0; i < width_; ++i) {
    if (test(i)) bits.push_back(i);
  }
  return bits;
}

Eigen::VectorXd Fingerprint::toDense() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(width_);
  for (int i = 0; i < width_; ++i) {
    if (test(i)) v(i) = 1.0;
  }
  return v;
}

namespace {

std::uint64_t atomInvariant(const Molecule& mol, std::size_t i) {
  const auto&   a = mol.atom(i);
  std::uint64_t h = hashCombine(0, static_cast<std::uint64_t>(a.element) + 1);
  h               = hashCombine(h, static_cast<std::uint64_t>(a.charge + 16));
  h               = hashCombine(h, a.aromatic ? 1 : 0);
  h               = hashCombine(h, static_cast<std::uint64_t>(mol.degree(i)));
  return hashCombine(h, static_cast<std::uint64_t>(a.implicitH));
}

}  // namespace

Fingerprint morganFingerprint(const Molecule& mol, int radius, int width) {
  if (radius < 0) throw Error(ErrorCode::InvalidArgument, "fingerprint radius must be non-negative");
  if (width < 64 || (width & (width - 1)) != 0) {
    throw Error(ErrorCode::InvalidArgument, "fingerprint width must be a power of two >= 64");
  }
  Fingerprint                fp(width, radius);
  const auto                 n = mol.numAtoms();
  std::vector<std::uint64_t> current(n);
  for (std::size_t i = 0; i < n; ++i) {
    current[i] = atomInvariant(mol, i);
    fp.set(static_cast<int>(current[i] % static_cast<std::uint64_t>(width)));
  }
  std::vector<std::uint64_t>                         next(n);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> nbrs;
  for (int r = 1; r <= radius; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      nbrs.clear();
      for (int bi : mol.incidentBonds(i)) {
        const auto& b = mol.bond(static_cast<std::size_t>(bi));
        nbrs.emplace_back(static_cast<std::uint64_t>(b.order), current[static_cast<std::size_t>(b.other(static_cast<int>(i)))]);
      }
      std::sort(nbrs.begin(), nbrs.end());
      std::uint64_t h = hashCombine(static_cast<std::uint64_t>(r), current[i]);
      for (const auto& [order, nh] : nbrs) {
        h = hashCombine(h, order);
        h = hashCombine(h, nh);
      }
      next[i] = h;
      fp.set(static_cast<int>(h % static_cast<std::uint64_t>(width)));
    }
    current.swap(next);
  }
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.width() != b.width()) {
    throw Error(ErrorCode::WidthMismatch, "fingerprint widths " + std::to_string(a.width()) + " and " + std::to_string(b.width()));
  }
  int  both = 0;
  int  any  = 0;
  auto wa   = a.words();
  auto wb   = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    both += std::popcount(wa[i] & wb[i]);
    any += std::popcount(wa[i] | wb[i]);
  }
  if (any == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(any);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0]           = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j]               = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag                 = up;
    }
  }
  return row[b.size()];
}

double editSimilarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

WlSignature wlSignature(const Molecule& mol, int iterations) {
  if (iterations < 0) throw Error(ErrorCode::InvalidArgument, "WL iterations must be non-negative");
  const auto                 n = mol.numAtoms();
  std::vector<std::uint64_t> labels(n);
  std::vector<std::uint64_t> all;
  all.reserve(n * static_cast<std::size_t>(iterations + 1));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = mol.atom(i);
    std::uint64_t h = hashCombine(0, static_cast<std::uint64_t>(a.element) + 1);
    h               = hashCombine(h, static_cast<std::uint64_t>(a.charge + 16));
    labels[i]       = hashCombine(h, a.aromatic ? 1 : 0);
    all.push_back(hashCombine(0, labels[i]));
  }
  std::vector<std::uint64_t>                           next(n);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> nbrs;
  for (int it = 1; it <= iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      nbrs.clear();
      for (int bi : mol.incidentBonds(i)) {
        const auto& b = mol.bond(static_cast<std::size_t>(bi));
        nbrs.emplace_back(labels[static_cast<std::size_t>(b.other(static_cast<int>(i)))], static_cast<std::uint64_t>(b.order));
      }
      std::sort(nbrs.begin(), nbrs.end());
      std::uint64_t h = labels[i];
      for (const auto& [label, order] : nbrs) h = hashCombine(hashCombine(h, order), label);
      next[i] = h;
      all.push_back(hashCombine(static_cast<std::uint64_t>(it), h));
    }
    labels.swap(next);
  }
  std::sort(all.begin(), all.end());
  WlSignature sig;
  for (std::size_t k = 0; k < all.size();) {
    std::size_t j = k;
    while (j < all.size() && all[j] == all[k]) ++j;
    sig.histogram.emplace_back(all[k], static_cast<int>(j - k));
    sig.selfKernel += static_cast<double>(j - k) * static_cast<double>(j - k);
    k = j;
  }
  return sig;
}

double wlKernel(const WlSignature& a, const WlSignature& b) {
  double      k = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.histogram.size() && j < b.histogram.size()) {
    if (a.histogram[i].first < b.histogram[j].first) {
      ++i;
    } else if (b.histogram[j].first < a.histogram[i].first) {
      ++j;
    } else {
      k += static_cast<double>(a.histogram[i].second) * static_cast<double>(b.histogram[j].second);
      ++i;
      ++j;
    }
  }
  return k;
}

double wlSimilarity(const WlSignature& a, const WlSignature& b) {
  if (a.selfKernel == 0.0 && b.selfKernel == 0.0) return 1.0;
  if (a.selfKernel == 0.0 || b.selfKernel == 0.0) return 0.0;
  const double k = wlKernel(a, b) / std::sqrt(a.selfKernel * b.selfKernel);
  return std::clamp(k, 0.0, 1.0);
}

double wlSimilarity(const Molecule& a, const Molecule& b, int iterations) {
  return wlSimilarity(wlSignature(a, iterations), wlSignature(b, iterations));
}

Eigen::MatrixXd similarityMatrix(std::span<const Molecule> rows, std::span<const Molecule> cols,
                                 const SimilarityOptions& options, int threads) {
  const auto      nr = rows.size();
  const auto      nc = cols.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));

  std::vector<Fingerprint> fpr;
  std::vector<Fingerprint> fpc;
  std::vector<std::string> smr;
  std::vector<std::string> smc;
  std::vector<WlSignature> wlr;
  std::vector<WlSignature> wlc;
  switch (options.metric) {
    case SimilarityMetric::Tanimoto:
      for (const auto& m : rows) fpr.push_back(morganFingerprint(m, options.radius, options.width));
      for (const auto& m : cols) fpc.push_back(morganFingerprint(m, options.radius, options.width));
      break;
    case SimilarityMetric::Edit:
      for (const auto& m : rows) smr.push_back(writeSmiles(m));
      for (const auto& m : cols) smc.push_back(writeSmiles(m));
      break;
    case SimilarityMetric::WL:
      for (const auto& m : rows) wlr.push_back(wlSignature(m, options.wlIterations));
      for (const auto& m : cols) wlc.push_back(wlSignature(m, options.wlIterations));
      break;
  }
  auto fillRows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < nc; ++j) {
        double v = 0.0;
        switch (options.metric) {
          case SimilarityMetric::Tanimoto: v = tanimoto(fpr[i], fpc[j]); break;
          case SimilarityMetric::Edit: v = editSimilarity(smr[i], smc[j]); break;
          case SimilarityMetric::WL: v = wlSimilarity(wlr[i], wlc[j]); break;
        }
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(nr, 1));
  if (workers == 1) {
    fillRows(0, nr);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t        chunk = (nr + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end   = std::min(nr, begin + chunk);
    if (begin < end) pool.emplace_back(fillRows, begin, end);
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace vscreen
