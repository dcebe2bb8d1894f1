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

#include "vscreen/binary_io.hpp"

#include <fstream>
#include <sstream>

#include "vscreen/errors.hpp"

namespace vscreen {

std::string BinaryReader::bytes(std::size_t n) {
  if (n > buf_.size() - pos_) throw Error(ErrorCode::FormatError, "truncated binary data");
  std::string out = buf_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::string BinaryReader::str() {
  const auto n = scalar<uint32_t>();
  return bytes(n);
}

Eigen::MatrixXd BinaryReader::matrix() {
  const auto rows = scalar<uint32_t>();
  const auto cols = scalar<uint32_t>();
  if (static_cast<uint64_t>(rows) * cols * sizeof(float) > buf_.size() - pos_) {
    throw Error(ErrorCode::FormatError, "matrix payload exceeds remaining data");
  }
  Eigen::MatrixXd m(rows, cols);
  for (uint32_t i = 0; i < rows; ++i) {
    for (uint32_t j = 0; j < cols; ++j) m(i, j) = static_cast<double>(scalar<float>());
  }
  return m;
}

std::string readFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFileBytes(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace vscreen
