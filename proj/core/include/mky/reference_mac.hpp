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

#include <optional>
#include <span>

#include "mky/index_engine.hpp"

namespace mky {

/// Centroid multiply-accumulate: decodes both operands exactly, multiplies
/// and sums in a wide accumulator, and rounds once into `out`. The index
/// engine must reproduce this bit for bit.
DotResult reference_dot(std::span<const Code> a_row, std::span<const Code> w_col, const TensorDictionary& da,
                        const TensorDictionary& dw, const QFormat& out);

GemmResult reference_gemm(const QuantizedTensor& a, const QuantizedTensor& w,
                          std::optional<QFormat> out = std::nullopt);

}  // namespace mky
