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

#ifndef VSCREEN_PIPELINE_INTERNAL_HPP
#define VSCREEN_PIPELINE_INTERNAL_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vscreen/pipeline.hpp"

namespace vscreen::detail {

enum class ParamKind { Int, Real, Choice };

struct ParamDef {
  std::string              name;
  ParamKind                kind = ParamKind::Real;
  std::optional<std::string> def;
  std::string              help;
  bool                     required = false;
  std::vector<std::string> choices;
  std::optional<double>    min;
  bool                     minExclusive = false;
};

struct InputDef {
  std::string name;
  bool        required = false;
  bool        prefix   = false;  //!< name is a prefix, e.g. "source." + id
  std::string help;
};

struct ArtifactDef {
  std::string name;
  std::string help;
};

struct TaskDef {
  Task                     task;
  std::string              help;
  std::vector<InputDef>    inputs;
  std::vector<ParamDef>    params;
  std::vector<ArtifactDef> artifacts;
};

const std::vector<TaskDef>& taskDefs();
const TaskDef&              taskDef(Task t);

std::optional<long long> parseInt(std::string_view s);
std::optional<double>    parseReal(std::string_view s);
void                     checkParam(const ParamDef& def, const std::string& value);
std::string              sha256Hex(std::string_view data);

}  // namespace vscreen::detail

#endif  // VSCREEN_PIPELINE_INTERNAL_HPP
