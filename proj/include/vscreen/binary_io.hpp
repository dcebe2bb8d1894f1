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

#ifndef VSCREEN_BINARY_IO_HPP
#define VSCREEN_BINARY_IO_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace vscreen {

//! Little-endian byte buffer writer.
class BinaryWriter {
 public:
  void bytes(std::string_view s) { buf_.append(s); }

  template <typename T> void scalar(T v) {
    static_assert(std::is_arithmetic_v<T>);
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    buf_.append(raw, sizeof(T));
  }

  void str(const std::string& s) {
    scalar<uint32_t>(static_cast<uint32_t>(s.size()));
    buf_.append(s);
  }

  //! Row-major float32 payload preceded by uint32 rows and cols.
  void matrix(const Eigen::MatrixXd& m) {
    scalar<uint32_t>(static_cast<uint32_t>(m.rows()));
    scalar<uint32_t>(static_cast<uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) scalar<float>(static_cast<float>(m(i, j)));
    }
  }

  [[nodiscard]] const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

//! Bounds-checked reader over a byte buffer; throws FormatError on truncation.
class BinaryReader {
 public:
  explicit BinaryReader(std::string data) : buf_(std::move(data)) {}

  std::string bytes(std::size_t n);

  template <typename T> T scalar() {
    const std::string raw = bytes(sizeof(T));
    char              tmp[sizeof(T)];
    std::memcpy(tmp, raw.data(), sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(tmp, tmp + sizeof(T));
    T v;
    std::memcpy(&v, tmp, sizeof(T));
    return v;
  }

  std::string     str();
  Eigen::MatrixXd matrix();
  [[nodiscard]] bool atEnd() const { return pos_ == buf_.size(); }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

std::string readFileBytes(const std::string& path);
void        writeFileBytes(const std::string& path, const std::string& data);

}  // namespace vscreen

#endif  // VSCREEN_BINARY_IO_HPP
