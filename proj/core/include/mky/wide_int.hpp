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
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace mky {

using Int128 = __int128;
using Int256 = boost::multiprecision::int256_t;

inline Int256 widen(Int128 v) {
  // cpp_int has no __int128 constructor on every boost build; go through halves.
  const bool neg = v < 0;
  unsigned __int128 mag = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1u
                              : static_cast<unsigned __int128>(v);
  Int256 out = static_cast<std::uint64_t>(mag >> 64);
  out <<= 64;
  out += static_cast<std::uint64_t>(mag);
  return neg ? Int256(-out) : out;
}

inline Int128 pow2_128(int k) { return static_cast<Int128>(1) << k; }

inline Int256 pow2_256(int k) { return Int256(1) << k; }

/// Right shift with round-half-away-from-zero. Negative shifts scale up.
template <typename T>
T round_shift(const T& value, int shift) {
  if (shift <= 0) return value << (-shift);
  const T half = T(1) << (shift - 1);
  if (value >= 0) return (value + half) >> shift;
  return -((-value + half) >> shift);
}

std::string to_decimal(Int128 v);
Int128 parse_int128(const std::string& text);

inline std::string to_decimal(const Int256& v) { return v.str(); }

}  // namespace mky

namespace mky {

/// Rounds an exact value carrying `from_frac` fractional bits into a raw
/// value with `to_frac` fractional bits, saturating to [lo, hi].
template <typename T>
std::int64_t narrow_round(const T& exact, int from_frac, int to_frac, std::int64_t lo, std::int64_t hi,
                          bool* saturated = nullptr) {
  const T r = round_shift(exact, from_frac - to_frac);
  bool sat = false;
  std::int64_t out;
  if (r > T(hi)) {
    out = hi;
    sat = true;
  } else if (r < T(lo)) {
    out = lo;
    sat = true;
  } else {
    out = static_cast<std::int64_t>(r);
  }
  if (saturated != nullptr) *saturated = sat;
  return out;
}

}  // namespace mky
