/* Copyright 2026 The gpcnn Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "gpcnn/error.hpp"

namespace gpcnn {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDimension: return "DimensionError";
    case ErrorCode::kNonFinite: return "NonFiniteError";
    case ErrorCode::kDegenerateBatch: return "DegenerateBatchError";
    case ErrorCode::kInvalidKeypoint: return "InvalidKeypointError";
    case ErrorCode::kMissingGroundTruth: return "MissingGroundTruthError";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRangeError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kCorruptCheckpoint: return "CorruptCheckpointError";
    case ErrorCode::kShapeMismatch: return "ShapeMismatchError";
    case ErrorCode::kVersionMismatch: return "VersionMismatchError";
    case ErrorCode::kUndefinedOks: return "UndefinedOksError";
    case ErrorCode::kEmptyInput: return "EmptyInputError";
    case ErrorCode::kCheckFailure: return "CheckFailure";
    case ErrorCode::kIo: return "IoError";
  }
  return "Error";
}

}  // namespace gpcnn
