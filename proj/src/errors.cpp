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

#include "vscreen/errors.hpp"

namespace vscreen {

std::string_view errorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnbalancedBracket: return "UnbalancedBracket";
    case ErrorCode::UnknownElement: return "UnknownElement";
    case ErrorCode::UnclosedRing: return "UnclosedRing";
    case ErrorCode::ValenceViolation: return "ValenceViolation";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::InvalidMolecule: return "InvalidMolecule";
    case ErrorCode::TooManyAtoms: return "TooManyAtoms";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::NoParentFound: return "NoParentFound";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BatchMismatch: return "BatchMismatch";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::BadSequence: return "BadSequence";
    case ErrorCode::UntrainedModel: return "UntrainedModel";
    case ErrorCode::BadStep: return "BadStep";
    case ErrorCode::MaskShapeMismatch: return "MaskShapeMismatch";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::string format(ErrorCode code, const std::string& message) {
  return std::string(errorCodeName(code)) + ": " + message;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message) : std::runtime_error(format(code, message)), code_(code) {}

Error::Error(ErrorCode code, const std::string& message, std::size_t position)
    : std::runtime_error(format(code, message + " at position " + std::to_string(position))),
      code_(code),
      position_(position) {}

}  // namespace vscreen
