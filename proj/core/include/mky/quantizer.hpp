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

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mky/fixed_point.hpp"
#include "mky/golden_dict.hpp"
#include "mky/tensor.hpp"
#include "mky/wide_int.hpp"

namespace mky {

inline constexpr int kGaussianLevels = 8;   // 3-bit index
inline constexpr int kOutlierMinInt = 8;
inline constexpr int kOutlierMaxInt = 45;
inline constexpr int kOutliersPerSide = 8;  // sign bit + 3-bit index

/// The curve a^k + b in the exact integer form the index engine needs.
///
/// `a` is held as alpha / 2^12 and `b` as beta / 2^13. Powers are exact:
///   P[k] = alpha^k * 2^(12*(7-k))   (k in [0,7],  units of 2^-84)
///   Q[t] = alpha^t * 2^(12*(14-t))  (t in [0,14], units of 2^-168)
/// so P[i] * P[j] == Q[i+j] holds without rounding.
class CurveConstants {
 public:
  static constexpr int kBaseFrac = 12;
  static constexpr int kOffsetFrac = 13;
  static constexpr int kPowFrac = kBaseFrac * (kGaussianLevels - 1);  // 84
  static constexpr int kProdFrac = 2 * kPowFrac;                       // 168

  CurveConstants() : CurveConstants(std::int64_t{1} << kBaseFrac, 0) {}
  CurveConstants(std::int64_t alpha, std::int64_t beta);
  static CurveConstants from_fit(const ExpFit& fit);

  std::int64_t alpha() const { return alpha_; }
  std::int64_t beta() const { return beta_; }
  double a() const;
  double b() const;
  /// a^k + b in floating point, using the quantized a and b.
  double magnitude(int k) const;

  const Int128& pow(int k) const { return pow_[k]; }
  const Int256& pow_sum(int t) const { return pow_sum_[t]; }
  /// b in units of 2^-84.
  const Int128& offset() const { return offset_; }

  friend bool operator==(const CurveConstants& l, const CurveConstants& r) {
    return l.alpha_ == r.alpha_ && l.beta_ == r.beta_;
  }

 private:
  std::int64_t alpha_;
  std::int64_t beta_;
  std::array<Int128, kGaussianLevels> pow_{};
  std::array<Int256, 2 * kGaussianLevels - 1> pow_sum_{};
  Int128 offset_ = 0;
};

/// 5-bit code: dictionary select, sign, 3-bit index.
class Code {
 public:
  constexpr Code() = default;
  static constexpr Code gaussian(int sign, int index) { return Code(false, sign, index); }
  static constexpr Code outlier(int sign, int index) { return Code(true, sign, index); }
  static Code from_bits(std::uint8_t bits);

  constexpr bool is_outlier() const { return (bits_ & 0x10) != 0; }
  constexpr int sign() const { return (bits_ >> 3) & 1; }
  constexpr int index() const { return bits_ & 0x7; }
  /// Sign and index, the 4 bits stored per element off-chip.
  constexpr std::uint8_t nibble() const { return bits_ & 0x0F; }
  constexpr std::uint8_t bits() const { return bits_; }
  constexpr int theta() const { return sign() ? -1 : 1; }

  friend constexpr bool operator==(Code, Code) = default;

 private:
  constexpr Code(bool outlier, int sign, int index)
      : bits_(static_cast<std::uint8_t>((outlier ? 0x10 : 0) | ((sign & 1) << 3) | (index & 7))) {}
  std::uint8_t bits_ = 0;
};

struct OutlierBin {
  int exponent = 0;  // curve index in [8, 45]
  std::int16_t centroid = 0;
};

struct CentroidEntry {
  std::int16_t value;
  Code code;
};

/// Per-tensor Gaussian + outlier dictionaries, already in fixed point.
///
/// Gaussian code (theta, k) decodes to theta*s*(a^k + b) + m. Outlier bins
/// extend the same curve to k in [8, 45]; each side (sign) holds up to 8 of
/// them, ascending in magnitude, addressed by the code's 3-bit index, so the
/// code's sign bit always matches the stored centroid's sign.
class TensorDictionary {
 public:
  TensorDictionary() = default;

  /// s and m are quantized into `fmt`; ot_exponents[side] lists the outlier
  /// curve indices for positive (0) and negative (1) values.
  static TensorDictionary assemble(double s, double m, const QFormat& fmt, const CurveConstants& curve,
                                   const std::array<std::vector<int>, 2>& ot_exponents);
  static TensorDictionary degenerate(double m, const CurveConstants& curve);

  double s() const { return s_; }
  double m() const { return m_; }
  const QFormat& fmt() const { return fmt_; }
  std::int64_t s_raw() const { return s_raw_; }
  std::int64_t m_raw() const { return m_raw_; }
  const CurveConstants& curve() const { return curve_; }
  bool is_degenerate() const { return degenerate_; }

  std::int16_t g_magnitude(int k) const { return g_magnitude_[k]; }
  std::int16_t g_value(int sign, int k) const { return g_value_[sign][k]; }
  std::span<const OutlierBin> outliers(int sign) const { return ot_[sign]; }
  std::size_t outlier_bin_count() const { return ot_[0].size() + ot_[1].size(); }

  /// Every centroid, ascending by value (the comparator bank order).
  std::span<const CentroidEntry> centroid_table() const { return table_; }
  bool strictly_sorted() const;

  /// Fixed16 value of a code in this dictionary's format.
  std::int16_t decode(Code c) const;
  /// Exact decoded value in units of 2^-(frac + 84).
  Int128 decode_wide(Code c) const;
  int wide_frac() const { return fmt_.frac + CurveConstants::kPowFrac; }

  /// Nearest centroid to a raw value in this dictionary's format. Ties go to
  /// the centroid of smaller magnitude.
  Code nearest(std::int64_t raw) const;

 private:
  void validate_code(Code c) const;
  void build_table();

  double s_ = 0.0;
  double m_ = 0.0;
  QFormat fmt_{16, 15};
  std::int64_t s_raw_ = 0;
  std::int64_t m_raw_ = 0;
  CurveConstants curve_;
  bool degenerate_ = false;
  std::array<std::int16_t, kGaussianLevels> g_magnitude_{};
  std::array<std::array<std::int16_t, kGaussianLevels>, 2> g_value_{};
  std::array<std::vector<OutlierBin>, 2> ot_;
  std::vector<CentroidEntry> table_;
};

/// Sign-weighted sums over Gaussian positions: sum(theta * P[k]) and
/// sum(theta). P is the exact power table of the curve.
struct AuxSums {
  Int128 sum_pow = 0;
  std::int64_t sum_sign = 0;

  void add(Code c, const CurveConstants& curve) {
    if (c.is_outlier()) return;
    const int t = c.theta();
    sum_pow += t * curve.pow(c.index());
    sum_sign += t;
  }
  void remove(Code c, const CurveConstants& curve) {
    if (c.is_outlier()) return;
    const int t = c.theta();
    sum_pow -= t * curve.pow(c.index());
    sum_sign -= t;
  }
  friend bool operator==(const AuxSums&, const AuxSums&) = default;
};

AuxSums compute_aux(std::span<const Code> codes, const CurveConstants& curve);

struct QuantizedTensor {
  Shape shape;
  std::vector<Code> codes;
  std::shared_ptr<const TensorDictionary> dict;
  AuxSums aux;

  std::size_t size() const { return codes.size(); }
  std::size_t outlier_count() const;
  double outlier_fraction() const;
};

/// Outlier-bin selection statistics, exposed for inspection and tests.
struct OutlierHistogram {
  std::array<std::array<std::size_t, kOutlierMaxInt + 1>, 2> counts{};
};

/// Occupancy of curve bins for values whose nearest curve point (over all
/// k in [0, 45]) is an outlier bin.
OutlierHistogram outlier_histogram(std::span<const double> values, double s, double m, const CurveConstants& curve);

TensorDictionary build_tensor_dictionary(const TensorStats& stats, const ExpFit& fit, std::span<const double> values);
TensorDictionary build_tensor_dictionary(const TensorStats& stats, const ExpFit& fit, const Tensor& values);

std::vector<Code> encode_values(std::span<const double> values, const TensorDictionary& dict);
QuantizedTensor encode_tensor(const Tensor& t, std::shared_ptr<const TensorDictionary> dict);

std::int16_t decode_code(Code c, const TensorDictionary& dict);
Tensor decode_tensor(const QuantizedTensor& q);

/// Pools every sample and fits one dictionary to the pooled values.
TensorDictionary profile_activations(std::span<const Tensor> samples, const ExpFit& fit);

}  // namespace mky
