/*
 * Copyright 2026 The rimg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace rimg {

enum class ErrorCode {
  kZeroRange,
  kDimensionMismatch,
  kInvalidArgument,
  kCorruptStream,
  kUnknownWeights,
  kHeaderMismatch,
  kMissingPreviousFrame,
  kNoPreviousFrame,
  kWeightShapeMismatch,
  kZeroPoints,
  kEmptyCloud,
  kTooFewPoints,
  kIo,
};

const char* to_string(ErrorCode code);

// All library failures are reported through this exception; `code()` names
// the error family so callers (the CLI in particular) can map it to an exit
// status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroRange: return "ZeroRange";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kCorruptStream: return "CorruptStream";
    case ErrorCode::kUnknownWeights: return "UnknownWeights";
    case ErrorCode::kHeaderMismatch: return "HeaderMismatch";
    case ErrorCode::kMissingPreviousFrame: return "MissingPreviousFrame";
    case ErrorCode::kNoPreviousFrame: return "NoPreviousFrame";
    case ErrorCode::kWeightShapeMismatch: return "WeightShapeMismatch";
    case ErrorCode::kZeroPoints: return "ZeroPoints";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace rimg
