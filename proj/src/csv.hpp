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

#ifndef VSCREEN_SRC_CSV_HPP
#define VSCREEN_SRC_CSV_HPP

#include <string>
#include <string_view>
#include <vector>

namespace vscreen::detail {

//! Comma split with surrounding blanks trimmed; no quoting.
inline std::vector<std::string> splitCsvLine(std::string_view line) {
  std::vector<std::string> out;
  std::size_t              start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    std::string field(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    const auto  b = field.find_first_not_of(" \t\r");
    const auto  e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace vscreen::detail

#endif  // VSCREEN_SRC_CSV_HPP
