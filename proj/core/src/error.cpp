// Copyright 2026 The mky Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "mky/error.hpp"

namespace mky {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported version";
    case ErrorCode::kBadDType: return "bad dtype";
    case ErrorCode::kTruncated: return "truncated payload";
    case ErrorCode::kShapeMismatch: return "shape/data mismatch";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kNonConvergence: return "non-convergence";
    case ErrorCode::kMalformed: return "malformed data";
    case ErrorCode::kMissingAux: return "missing aux sums";
    case ErrorCode::kCounterOverflow: return "counter overflow";
  }
  return "unknown error";
}

}  // namespace mky
