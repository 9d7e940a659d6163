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

namespace mky {

/// Signed two's-complement fixed-point layout: `bits` total, `frac` of them
/// fractional. Raw values are carried in int64 so formats up to 32 bits fit.
struct QFormat {
  int bits = 16;
  int frac = 0;

  std::int64_t max_raw() const { return (std::int64_t{1} << (bits - 1)) - 1; }
  std::int64_t min_raw() const { return -(std::int64_t{1} << (bits - 1)); }
  double ulp() const;
  double max_value() const { return static_cast<double>(max_raw()) * ulp(); }
  double min_value() const { return static_cast<double>(min_raw()) * ulp(); }

  /// Throws unless 2 <= bits <= 32 and 0 <= frac < bits.
  void validate() const;

  friend bool operator==(const QFormat&, const QFormat&) = default;
};

/// frac = b - ceil(log2(max - min)), clamped to [0, b-1].
int compute_frac(int bits, double max, double min);

/// Picks the finest format whose signed range holds every value in [lo, hi].
/// compute_frac is applied to the symmetric span [-M, M], M = max(|lo|, |hi|),
/// then backed off while M would saturate.
QFormat choose_format(double lo, double hi, int bits = 16);

/// Round-half-away-from-zero, saturating. NaN maps to zero.
std::int64_t to_fixed(double value, const QFormat& fmt, bool* saturated = nullptr);

double to_float(std::int64_t raw, const QFormat& fmt);

std::int64_t saturate(std::int64_t raw, const QFormat& fmt, bool* saturated = nullptr);

struct FxResult {
  std::int64_t raw = 0;
  bool overflow = false;
};

/// x and y share `fmt`; the sum is exact before saturation.
FxResult fx_add(std::int64_t x, std::int64_t y, const QFormat& fmt);

/// Exact wide product, then a single rounding into `out`.
FxResult fx_mul(std::int64_t x, std::int64_t y, const QFormat& fx, const QFormat& fy, const QFormat& out);

}  // namespace mky
