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

#include "hyperfuse/error.h"

namespace hyperfuse {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kHeaderParseError: return "HeaderParseError";
    case ErrorCode::kPayloadSizeMismatch: return "PayloadSizeMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kBandOutOfRange: return "BandOutOfRange";
    case ErrorCode::kInvalidFactor: return "InvalidFactor";
    case ErrorCode::kFactorTooLarge: return "FactorTooLarge";
    case ErrorCode::kNoWavelengths: return "NoWavelengths";
    case ErrorCode::kEmptyRange: return "EmptyRange";
    case ErrorCode::kTooSmall: return "TooSmall";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kSizeTooLarge: return "SizeTooLarge";
    case ErrorCode::kCountTooLarge: return "CountTooLarge";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kUntrainedParams: return "UntrainedParams";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kCacheMismatch: return "CacheMismatch";
    case ErrorCode::kEmptyImage: return "EmptyImage";
    case ErrorCode::kNoAliveNodes: return "NoAliveNodes";
    case ErrorCode::kZeroChunkSize: return "ZeroChunkSize";
    case ErrorCode::kChunkUnavailable: return "ChunkUnavailable";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kManifestParseError: return "ManifestParseError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace hyperfuse
