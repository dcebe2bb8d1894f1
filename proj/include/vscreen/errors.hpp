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

#ifndef VSCREEN_ERRORS_HPP
#define VSCREEN_ERRORS_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vscreen {

//! Every domain error raised by the toolkit carries one of these codes.
enum class ErrorCode {
  // chem
  UnbalancedBracket,
  UnknownElement,
  UnclosedRing,
  ValenceViolation,
  Unsupported,
  InvalidMolecule,
  TooManyAtoms,
  // similarity
  WidthMismatch,
  // mevon
  NoParentFound,
  // kg / domain / mpnn
  BadRange,
  OutOfRange,
  DimensionMismatch,
  TooLarge,
  ShapeMismatch,
  BatchMismatch,
  SchemaError,
  EmptyDataset,
  BadSequence,
  UntrainedModel,
  // diffusion
  BadStep,
  MaskShapeMismatch,
  EmptySet,
  // io / pipeline
  IoError,
  FormatError,
  InvalidArgument,
};

std::string_view errorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  Error(ErrorCode code, const std::string& message, std::size_t position);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  //! Character offset into the offending input, when the error is positional.
  [[nodiscard]] std::optional<std::size_t> position() const noexcept { return position_; }

 private:
  ErrorCode                  code_;
  std::optional<std::size_t> position_;
};

}  // namespace vscreen

#endif  // VSCREEN_ERRORS_HPP
