// Copyright (c) 2026 The Hyperfuse Authors. All Rights Reserved
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

#ifndef HYPERFUSE_ERROR_H_
#define HYPERFUSE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace hyperfuse {

enum class ErrorCode {
  // cube IO
  kMissingFile,
  kHeaderParseError,
  kPayloadSizeMismatch,
  kNonFiniteValue,
  kIoError,
  kBandOutOfRange,
  // simulation
  kInvalidFactor,
  kFactorTooLarge,
  kNoWavelengths,
  kEmptyRange,
  kTooSmall,
  // fusion / lstm
  kDimMismatch,
  kSizeTooLarge,
  kCountTooLarge,
  kDivergenceDetected,
  kUntrainedParams,
  kShapeMismatch,
  kEmptySequence,
  kCacheMismatch,
  // metrics
  kEmptyImage,
  // chunk store
  kNoAliveNodes,
  kZeroChunkSize,
  kChunkUnavailable,
  kChecksumMismatch,
  kProtocolError,
  kManifestParseError,
  // generic
  kInvalidArgument,
  kUsageError,
};

std::string_view error_code_name(ErrorCode code);

// All domain failures are reported through this one exception type; callers
// switch on code() when they need to distinguish failure classes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hyperfuse

#endif  // HYPERFUSE_ERROR_H_
