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


#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mky/index_engine.hpp"

namespace mky::cli {

/// Runs the mky command line. `args` excludes the program name. Returns the
/// process exit code; all output goes to `out` and diagnostics to `err`.
struct VerifyReport {
  std::size_t outputs = 0;
  std::size_t mismatches = 0;
  std::int64_t max_raw_discrepancy = 0;
  Int256 max_exact_discrepancy = 0;
  bool pass() const { return mismatches == 0; }
};

/// Element-wise comparison of an engine GEMM against the oracle GEMM.
VerifyReport compare_gemm(const GemmResult& engine, const GemmResult& oracle);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mky::cli
