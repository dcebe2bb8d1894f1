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

#ifndef VSCREEN_SIMILARITY_HPP
#define VSCREEN_SIMILARITY_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "vscreen/chem.hpp"

namespace vscreen {

/**
 * Hash primitives used by fingerprints and WL labels. Outputs are bit-exact on every
 * platform; the constants are part of the file format and must not change.
 *
 *   mix64(z):   z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
 *               z ^= z >> 27; z *= 0x94D049BB133111EB;
 *               z ^= z >> 31
 *   combine(seed, v) = mix64(seed ^ (v + 0x9E3779B97F4A7C15 + (seed << 6) + (seed >> 2)))
 */
std::uint64_t mix64(std::uint64_t z);
std::uint64_t hashCombine(std::uint64_t seed, std::uint64_t value);

class Fingerprint {
 public:
  Fingerprint() = default;
  Fingerprint(int width, int radius);

  [[nodiscard]] int  width() const { return width_; }
  [[nodiscard]] int  radius() const { return radius_; }
  [[nodiscard]] bool test(int bit) const { return (words_[static_cast<std::size_t>(bit) / 64] >> (bit % 64)) & 1U; }
  void               set(int bit) { words_[static_cast<std::size_t>(bit) / 64] |= std::uint64_t{1} << (bit % 64); }
  [[nodiscard]] int  popcount() const;
  [[nodiscard]] std::vector<int> onBits() const;
  [[nodiscard]] std::span<const std::uint64_t> words() const { return words_; }
  //! 0/1 descriptor vector of length width().
  [[nodiscard]] Eigen::VectorXd toDense() const;

  bool operator==(const Fingerprint&) const = default;

 private:
  int                        width_  = 0;
  int                        radius_ = 0;
  std::vector<std::uint64_t> words_;
};

inline constexpr int kDefaultFingerprintRadius = 2;
inline constexpr int kDefaultFingerprintWidth  = 2048;
inline constexpr int kDefaultWlIterations      = 3;

/**
 * Circular (Morgan-style) fingerprint. Round 0 hashes the atom invariant
 * (element, charge, aromatic, degree, implicit H); round r hashes the round r-1 value
 * with the sorted (bond order, neighbor hash) pairs. Every environment hash from
 * rounds 0..radius sets bit (hash mod width).
 *
 * Requires radius >= 0 and width a power of two >= 64.
 */
Fingerprint morganFingerprint(const Molecule& mol, int radius = kDefaultFingerprintRadius,
                              int width = kDefaultFingerprintWidth);

//! |a & b| / |a | b|; 1 when both are empty. Throws WidthMismatch.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

std::size_t levenshtein(std::string_view a, std::string_view b);
//! 1 - levenshtein / max(|a|, |b|); 1 when both are empty.
double editSimilarity(std::string_view a, std::string_view b);

//! Label histogram accumulated over WL iterations 0..h, sorted by label.
struct WlSignature {
  std::vector<std::pair<std::uint64_t, int>> histogram;
  double                                     selfKernel = 0.0;
};

WlSignature wlSignature(const Molecule& mol, int iterations = kDefaultWlIterations);
double      wlKernel(const WlSignature& a, const WlSignature& b);
//! Normalized WL subtree kernel k(a,b) / sqrt(k(a,a) k(b,b)).
double      wlSimilarity(const WlSignature& a, const WlSignature& b);
double      wlSimilarity(const Molecule& a, const Molecule& b, int iterations = kDefaultWlIterations);

enum class SimilarityMetric { Tanimoto, Edit, WL };

struct SimilarityOptions {
  SimilarityMetric metric       = SimilarityMetric::Tanimoto;
  int              radius       = kDefaultFingerprintRadius;
  int              width        = kDefaultFingerprintWidth;
  int              wlIterations = kDefaultWlIterations;
};

//! rows x cols matrix of pairwise similarities. Rows are partitioned across
//! `threads` workers; the output does not depend on the partitioning.
Eigen::MatrixXd similarityMatrix(std::span<const Molecule> rows, std::span<const Molecule> cols,
                                 const SimilarityOptions& options = {}, int threads = 1);

}  // namespace vscreen

#endif  // VSCREEN_SIMILARITY_HPP
