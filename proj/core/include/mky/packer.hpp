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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "mky/quantizer.hpp"

namespace mky {

inline constexpr std::uint32_t kDefaultGroupSize = 64;
inline constexpr int kOffsetBits = 6;
inline constexpr int kCountBits = 8;

/// Off-chip container: a dense 4-bit value area (sign + 3-bit index per
/// element, element 2k in the low nibble of byte k) and an outlier area that
/// holds, per group, an 8-bit count followed by that many 6-bit in-group
/// offsets. The outlier area is one MSB-first bitstream, zero padded only
/// at its end.
struct PackedTensor {
  std::uint64_t element_count = 0;
  std::uint32_t group_size = kDefaultGroupSize;
  std::vector<std::uint8_t> value_area;
  std::vector<std::uint8_t> ot_area;

  std::uint64_t group_count() const {
    return group_size == 0 ? 0 : (element_count + group_size - 1) / group_size;
  }
  friend bool operator==(const PackedTensor&, const PackedTensor&) = default;
};

PackedTensor pack(const QuantizedTensor& q, std::uint32_t group_size = kDefaultGroupSize);

/// Rebuilds 5-bit codes and the aux sums. An empty `shape` means a flat
/// tensor of element_count values. Throws kMalformed on bad counts or
/// non-ascending offsets.
QuantizedTensor unpack(const PackedTensor& p, std::shared_ptr<const TensorDictionary> dict, Shape shape = {});

/// Reads the value area alone: every element as a Gaussian code.
std::vector<Code> value_area_codes(const PackedTensor& p);

/// Outlier positions of each group, decoded from the outlier area.
std::vector<std::vector<std::uint8_t>> outlier_offsets(const PackedTensor& p);

struct PackedSize {
  std::uint64_t value_bits = 0;     // 4 per element
  std::uint64_t count_bits = 0;     // 8 per group
  std::uint64_t offset_bits = 0;    // 6 per outlier
  std::uint64_t outliers = 0;
  std::uint64_t payload_bits() const { return value_bits + count_bits + offset_bits; }
  std::uint64_t stored_bytes = 0;   // value and outlier areas as stored
  std::uint64_t file_bytes = 0;     // including the header
  double bits_per_value = 0.0;      // payload_bits / elements
  double compression_vs_fp32 = 0.0;
};

PackedSize measure(const PackedTensor& p);

std::vector<std::uint8_t> serialize_packed(const PackedTensor& p);
PackedTensor parse_packed(std::span<const std::uint8_t> bytes);
void save_packed(const PackedTensor& p, const std::filesystem::path& path);
PackedTensor load_packed(const std::filesystem::path& path);

}  // namespace mky
