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


#include "mky/wide_int.hpp"

#include <algorithm>

#include "mky/error.hpp"

namespace mky {

std::string to_decimal(Int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  unsigned __int128 mag = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1u
                              : static_cast<unsigned __int128>(v);
  std::string digits;
  while (mag != 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(mag % 10)));
    mag /= 10;
  }
  if (neg) digits.push_back('-');
  std::reverse(digits.begin(), digits.end());
  return digits;
}

Int128 parse_int128(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::kMalformed, "empty integer literal");
  std::size_t pos = 0;
  const bool neg = text[0] == '-';
  if (neg || text[0] == '+') ++pos;
  if (pos == text.size()) throw Error(ErrorCode::kMalformed, "bad integer literal '" + text + "'");
  const unsigned __int128 limit = static_cast<unsigned __int128>(1) << 127;
  unsigned __int128 mag = 0;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c < '0' || c > '9') throw Error(ErrorCode::kMalformed, "bad integer literal '" + text + "'");
    mag = mag * 10 + static_cast<unsigned>(c - '0');
    if (mag > limit) throw Error(ErrorCode::kOutOfRange, "integer literal exceeds 128 bits");
  }
  if (!neg && mag == limit) throw Error(ErrorCode::kOutOfRange, "integer literal exceeds 128 bits");
  if (neg) return mag == limit ? static_cast<Int128>(-(static_cast<Int128>(limit - 1)) - 1) : -static_cast<Int128>(mag);
  return static_cast<Int128>(mag);
}

}  // namespace mky
