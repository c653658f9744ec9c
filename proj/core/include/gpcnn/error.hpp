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

#ifndef GPCNN_ERROR_HPP_
#define GPCNN_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace gpcnn {

// Every failure raised by the library carries one of these codes so callers
// (and the CLI exit-code mapping) can branch without parsing messages.
enum class ErrorCode {
  kDimension,
  kNonFinite,
  kDegenerateBatch,
  kInvalidKeypoint,
  kMissingGroundTruth,
  kIndexOutOfRange,
  kConfig,
  kCorruptCheckpoint,
  kShapeMismatch,
  kVersionMismatch,
  kUndefinedOks,
  kEmptyInput,
  kCheckFailure,
  kIo,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// The message expression is only evaluated when the check fails.
#define GPCNN_REQUIRE(condition, code, message)            \
  do {                                                     \
    if (!(condition)) ::gpcnn::fail((code), (message));    \
  } while (false)

}  // namespace gpcnn

#endif  // GPCNN_ERROR_HPP_
