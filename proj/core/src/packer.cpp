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


#include "mky/packer.hpp"

#include <string>

#include "byte_io.hpp"
#include "mky/error.hpp"

namespace mky {
namespace {

constexpr char kMagic[5] = "MKYP";
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 2 + 8 + 4 + 8;

class BitWriter {
 public:
  void put(std::uint32_t value, int bits) {
    for (int i = bits - 1; i >= 0; --i) {
      if (used_ % 8 == 0) out_.push_back(0);
      if ((value >> i) & 1u) out_.back() |= static_cast<std::uint8_t>(0x80u >> (used_ % 8));
      ++used_;
    }
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
  std::uint64_t used_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint32_t get(int bits) {
    if (pos_ + static_cast<std::uint64_t>(bits) > in_.size() * 8) {
      throw Error(ErrorCode::kTruncated, "outlier area ends inside a field");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < bits; ++i, ++pos_) v = (v << 1) | ((in_[pos_ / 8] >> (7 - pos_ % 8)) & 1u);
    return v;
  }
  std::uint64_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::uint64_t pos_ = 0;
};

void check_group_size(std::uint32_t g) {
  if (g == 0 || g > (1u << kOffsetBits)) {
    throw Error(ErrorCode::kInvalidArgument, "group size must be in [1, 64], got " + std::to_string(g));
  }
}

void check_value_area(const PackedTensor& p) {
  if (p.value_area.size() != (p.element_count + 1) / 2) {
    throw Error(ErrorCode::kMalformed, "value area holds " + std::to_string(p.value_area.size()) + " bytes for " +
                                           std::to_string(p.element_count) + " elements");
  }
}

}  // namespace

PackedTensor pack(const QuantizedTensor& q, std::uint32_t group_size) {
  check_group_size(group_size);
  PackedTensor p;
  p.element_count = q.codes.size();
  p.group_size = group_size;
  p.value_area.assign((q.codes.size() + 1) / 2, 0);
  for (std::size_t i = 0; i < q.codes.size(); ++i) {
    const std::uint8_t nib = q.codes[i].nibble();
    p.value_area[i / 2] |= static_cast<std::uint8_t>(i % 2 == 0 ? nib : nib << 4);
  }
  BitWriter ot;
  for (std::size_t start = 0; start < q.codes.size(); start += group_size) {
    const std::size_t end = std::min<std::size_t>(start + group_size, q.codes.size());
    std::uint32_t count = 0;
    for (std::size_t i = start; i < end; ++i) count += q.codes[i].is_outlier() ? 1u : 0u;
    ot.put(count, kCountBits);
    for (std::size_t i = start; i < end; ++i) {
      if (q.codes[i].is_outlier()) ot.put(static_cast<std::uint32_t>(i - start), kOffsetBits);
    }
  }
  p.ot_area = ot.take();
  return p;
}

std::vector<std::vector<std::uint8_t>> outlier_offsets(const PackedTensor& p) {
  check_group_size(p.group_size);
  BitReader r(p.ot_area);
  std::vector<std::vector<std::uint8_t>> groups(p.group_count());
  for (std::uint64_t g = 0; g < groups.size(); ++g) {
    const std::uint64_t len = std::min<std::uint64_t>(p.group_size, p.element_count - g * p.group_size);
    const std::uint32_t count = r.get(kCountBits);
    if (count > len) {
      throw Error(ErrorCode::kMalformed,
                  "group " + std::to_string(g) + " claims " + std::to_string(count) + " outliers in " +
                      std::to_string(len) + " elements");
    }
    auto& offs = groups[g];
    offs.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::uint32_t off = r.get(kOffsetBits);
      if (off >= len) {
        throw Error(ErrorCode::kMalformed, "group " + std::to_string(g) + " offset " + std::to_string(off) +
                                               " beyond group length " + std::to_string(len));
      }
      if (!offs.empty() && off <= offs.back()) {
        throw Error(ErrorCode::kMalformed, "group " + std::to_string(g) + " offsets not strictly ascending");
      }
      offs.push_back(static_cast<std::uint8_t>(off));
    }
  }
  const std::uint64_t used = r.position();
  if ((used + 7) / 8 != p.ot_area.size()) {
    throw Error(ErrorCode::kMalformed, "outlier area has " + std::to_string(p.ot_area.size() * 8 - used) +
                                           " bits beyond its last group");
  }
  if (used % 8 != 0 && (p.ot_area.back() & (0xFFu >> (used % 8))) != 0) {
    throw Error(ErrorCode::kMalformed, "outlier area padding is not zero");
  }
  return groups;
}

std::vector<Code> value_area_codes(const PackedTensor& p) {
  check_value_area(p);
  std::vector<Code> codes(p.element_count);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const std::uint8_t nib = static_cast<std::uint8_t>(i % 2 == 0 ? p.value_area[i / 2] & 0x0F : p.value_area[i / 2] >> 4);
    codes[i] = Code::from_bits(nib);
  }
  if (p.element_count % 2 == 1 && (p.value_area.back() >> 4) != 0) {
    throw Error(ErrorCode::kMalformed, "value area padding nibble is not zero");
  }
  return codes;
}

QuantizedTensor unpack(const PackedTensor& p, std::shared_ptr<const TensorDictionary> dict, Shape shape) {
  if (!dict) throw Error(ErrorCode::kInvalidArgument, "unpack needs a dictionary");
  if (shape.empty()) shape = {static_cast<std::size_t>(p.element_count)};
  if (element_count(shape) != p.element_count) {
    throw Error(ErrorCode::kShapeMismatch, "shape " + shape_string(shape) + " does not hold " +
                                               std::to_string(p.element_count) + " elements");
  }
  QuantizedTensor q;
  q.codes = value_area_codes(p);
  const auto groups = outlier_offsets(p);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::uint8_t off : groups[g]) {
      Code& c = q.codes[g * p.group_size + off];
      c = Code::outlier(c.sign(), c.index());
    }
  }
  for (Code c : q.codes) {
    if (c.is_outlier() && static_cast<std::size_t>(c.index()) >= dict->outliers(c.sign()).size()) {
      throw Error(ErrorCode::kMalformed, "outlier index beyond the dictionary");
    }
  }
  q.shape = std::move(shape);
  q.aux = compute_aux(q.codes, dict->curve());
  q.dict = std::move(dict);
  return q;
}

PackedSize measure(const PackedTensor& p) {
  const auto groups = outlier_offsets(p);
  PackedSize s;
  s.value_bits = 4 * p.element_count;
  s.count_bits = kCountBits * groups.size();
  for (const auto& g : groups) s.outliers += g.size();
  s.offset_bits = kOffsetBits * s.outliers;
  s.stored_bytes = p.value_area.size() + p.ot_area.size();
  s.file_bytes = kHeaderBytes + s.stored_bytes;
  if (p.element_count > 0) {
    s.bits_per_value = static_cast<double>(s.payload_bits()) / static_cast<double>(p.element_count);
    s.compression_vs_fp32 = 32.0 * static_cast<double>(p.element_count) / static_cast<double>(s.payload_bits());
  }
  return s;
}

std::vector<std::uint8_t> serialize_packed(const PackedTensor& p) {
  check_group_size(p.group_size);
  check_value_area(p);
  detail::ByteWriter w;
  w.put_magic(kMagic);
  w.put_u16(kVersion);
  w.put_u64(p.element_count);
  w.put_u32(p.group_size);
  w.put_u64(p.value_area.size());
  w.put_bytes(p.value_area);
  w.put_bytes(p.ot_area);
  return std::move(w.bytes());
}

PackedTensor parse_packed(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (!r.magic_is(kMagic)) throw Error(ErrorCode::kBadMagic, "not an MKYP packed file");
  r.skip(4);
  const std::uint16_t version = r.u16();
  if (version != kVersion) throw Error(ErrorCode::kUnsupportedVersion, "packed file version " + std::to_string(version));
  PackedTensor p;
  p.element_count = r.u64();
  p.group_size = r.u32();
  check_group_size(p.group_size);
  const std::uint64_t value_len = r.u64();
  if (value_len != (p.element_count + 1) / 2) {
    throw Error(ErrorCode::kMalformed, "value area length " + std::to_string(value_len) + " for " +
                                           std::to_string(p.element_count) + " elements");
  }
  const auto values = r.take(value_len);
  p.value_area.assign(values.begin(), values.end());
  const auto rest = r.take(r.remaining());
  p.ot_area.assign(rest.begin(), rest.end());
  outlier_offsets(p);  // validates counts, offsets and padding
  return p;
}

void save_packed(const PackedTensor& p, const std::filesystem::path& path) {
  const auto bytes = serialize_packed(p);
  write_file(path, bytes);
}

PackedTensor load_packed(const std::filesystem::path& path) { return parse_packed(read_file(path)); }

}  // namespace mky
