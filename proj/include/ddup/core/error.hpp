// Copyright 2026-present the ddup authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ddup {

enum class ErrorCode {
    kInvalidArgument,
    kDimensionMismatch,
    kZeroVector,
    kNonFinite,
    kDuplicateId,
    kUnknownId,
    kNotReady,
    kCorrupt,
    kVersionMismatch,
    kTruncated,
    kIo,
    kDiverged,
};

inline std::string_view
to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument:
            return "invalid_argument";
        case ErrorCode::kDimensionMismatch:
            return "dimension_mismatch";
        case ErrorCode::kZeroVector:
            return "zero_vector";
        case ErrorCode::kNonFinite:
            return "non_finite";
        case ErrorCode::kDuplicateId:
            return "duplicate_id";
        case ErrorCode::kUnknownId:
            return "unknown_id";
        case ErrorCode::kNotReady:
            return "not_ready";
        case ErrorCode::kCorrupt:
            return "corrupt";
        case ErrorCode::kVersionMismatch:
            return "version_mismatch";
        case ErrorCode::kTruncated:
            return "truncated";
        case ErrorCode::kIo:
            return "io_error";
        case ErrorCode::kDiverged:
            return "diverged";
    }
    return "unknown";
}

/// Every failure raised by the library. The code is stable and is what the
/// HTTP layer reports back to clients.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {
    }

    ErrorCode
    code() const noexcept {
        return code_;
    }

private:
    ErrorCode code_;
};

[[noreturn]] inline void
fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void
require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) {
        fail(code, message);
    }
}

// Literal messages are only turned into strings on failure; hot loops rely on it.
inline void
require(bool condition, ErrorCode code, const char* message) {
    if (!condition) [[unlikely]] {
        fail(code, message);
    }
}

}  // namespace ddup
