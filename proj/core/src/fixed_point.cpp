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


#include "mky/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mky/error.hpp"
#include "mky/wide_int.hpp"

namespace mky {

double QFormat::ulp() const { return std::ldexp(1.0, -frac); }

void QFormat::validate() const {
  if (bits < 2 || bits > 32) {
    throw Error(ErrorCode::kInvalidArgument, "fixed-point width must be in [2, 32], got " + std::to_string(bits));
  }
  if (frac < 0 || frac >= bits) {
    throw Error(ErrorCode::kInvalidArgument,
                "fractional bits must be in [0, " + std::to_string(bits - 1) + "], got " + std::to_string(frac));
  }
}

int compute_frac(int bits, double max, double min) {
  if (!(max > min)) throw Error(ErrorCode::kInvalidArgument, "compute_frac requires max > min");
  const double span = max - min;
  // ceil(log2(span)) from the binary exponent; exact even when span sits
  // one ulp above a power of two, where std::log2 would round down.
  int exponent = 0;
  const double mantissa = std::frexp(span, &exponent);
  const int ceil_log2 = mantissa == 0.5 ? exponent - 1 : exponent;
  const int frac = bits - ceil_log2;
  return std::clamp(frac, 0, bits - 1);
}

QFormat choose_format(double lo, double hi, int bits) {
  const double bound = std::max(std::fabs(lo), std::fabs(hi));
  QFormat fmt{bits, bits - 1};
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    if (!std::isfinite(bound)) fmt.frac = 0;
    return fmt;
  }
  fmt.frac = compute_frac(bits, bound, -bound);
  while (fmt.frac > 0 && std::round(std::ldexp(bound, fmt.frac)) > static_cast<double>(fmt.max_raw())) {
    --fmt.frac;
  }
  return fmt;
}

std::int64_t saturate(std::int64_t raw, const QFormat& fmt, bool* saturated) {
  const std::int64_t clamped = std::clamp(raw, fmt.min_raw(), fmt.max_raw());
  if (saturated != nullptr) *saturated = clamped != raw;
  return clamped;
}

std::int64_t to_fixed(double value, const QFormat& fmt, bool* saturated) {
  if (saturated != nullptr) *saturated = false;
  if (std::isnan(value)) return 0;
  const double scaled = std::round(std::ldexp(value, fmt.frac));
  if (scaled > static_cast<double>(fmt.max_raw())) {
    if (saturated != nullptr) *saturated = true;
    return fmt.max_raw();
  }
  if (scaled < static_cast<double>(fmt.min_raw())) {
    if (saturated != nullptr) *saturated = true;
    return fmt.min_raw();
  }
  return static_cast<std::int64_t>(scaled);
}

double to_float(std::int64_t raw, const QFormat& fmt) { return std::ldexp(static_cast<double>(raw), -fmt.frac); }

FxResult fx_add(std::int64_t x, std::int64_t y, const QFormat& fmt) {
  FxResult r;
  r.raw = saturate(x + y, fmt, &r.overflow);
  return r;
}

FxResult fx_mul(std::int64_t x, std::int64_t y, const QFormat& fx, const QFormat& fy, const QFormat& out) {
  const Int128 product = static_cast<Int128>(x) * static_cast<Int128>(y);
  const int shift = fx.frac + fy.frac - out.frac;
  const Int128 rounded = round_shift(product, shift);
  FxResult r;
  const Int128 hi = out.max_raw();
  const Int128 lo = out.min_raw();
  if (rounded > hi) {
    r.raw = out.max_raw();
    r.overflow = true;
  } else if (rounded < lo) {
    r.raw = out.min_raw();
    r.overflow = true;
  } else {
    r.raw = static_cast<std::int64_t>(rounded);
  }
  return r;
}

}  // namespace mky
