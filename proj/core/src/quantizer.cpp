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


#include "mky/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mky/error.hpp"

namespace mky {
namespace {

std::int16_t to_int16_saturated(Int128 raw, const QFormat& fmt) {
  if (raw > fmt.max_raw()) return static_cast<std::int16_t>(fmt.max_raw());
  if (raw < fmt.min_raw()) return static_cast<std::int16_t>(fmt.min_raw());
  return static_cast<std::int16_t>(raw);
}

}  // namespace

CurveConstants::CurveConstants(std::int64_t alpha, std::int64_t beta) : alpha_(alpha), beta_(beta) {
  if (alpha_ <= (std::int64_t{1} << kBaseFrac) || alpha_ > (std::int64_t{2} << kBaseFrac)) {
    // a == 1 is allowed only for the default-constructed placeholder.
    if (alpha_ != (std::int64_t{1} << kBaseFrac)) {
      throw Error(ErrorCode::kInvalidArgument, "curve base must lie in (1, 2]");
    }
  }
  Int256 alpha_pow = 1;
  for (int t = 0; t < 2 * kGaussianLevels - 1; ++t) {
    pow_sum_[t] = alpha_pow << (kBaseFrac * (2 * kGaussianLevels - 2 - t));
    if (t < kGaussianLevels) {
      Int128 p = 1;
      for (int i = 0; i < t; ++i) p *= alpha_;
      pow_[t] = p << (kBaseFrac * (kGaussianLevels - 1 - t));
    }
    alpha_pow *= alpha_;
  }
  offset_ = static_cast<Int128>(beta_) << (kPowFrac - kOffsetFrac);
}

CurveConstants CurveConstants::from_fit(const ExpFit& fit) {
  const auto alpha = static_cast<std::int64_t>(std::llround(std::ldexp(fit.a, kBaseFrac)));
  const auto beta = static_cast<std::int64_t>(std::llround(std::ldexp(fit.b, kOffsetFrac)));
  return CurveConstants(alpha, beta);
}

double CurveConstants::a() const { return std::ldexp(static_cast<double>(alpha_), -kBaseFrac); }
double CurveConstants::b() const { return std::ldexp(static_cast<double>(beta_), -kOffsetFrac); }
double CurveConstants::magnitude(int k) const { return std::pow(a(), k) + b(); }

Code Code::from_bits(std::uint8_t bits) {
  if (bits > 0x1F) throw Error(ErrorCode::kOutOfRange, "code wider than 5 bits");
  return Code((bits & 0x10) != 0, (bits >> 3) & 1, bits & 7);
}

TensorDictionary TensorDictionary::assemble(double s, double m, const QFormat& fmt, const CurveConstants& curve,
                                            const std::array<std::vector<int>, 2>& ot_exponents) {
  fmt.validate();
  if (fmt.bits != 16) throw Error(ErrorCode::kInvalidArgument, "dictionaries hold 16-bit centroids");
  if (!(s >= 0.0) || !std::isfinite(s) || !std::isfinite(m)) {
    throw Error(ErrorCode::kInvalidArgument, "scale must be finite and non-negative");
  }
  TensorDictionary d;
  d.s_ = s;
  d.m_ = m;
  d.fmt_ = fmt;
  d.curve_ = curve;
  d.s_raw_ = to_fixed(s, fmt);
  // A positive scale below one LSB would collapse every Gaussian level onto m.
  if (s > 0.0 && d.s_raw_ == 0) d.s_raw_ = 1;
  d.m_raw_ = to_fixed(m, fmt);
  d.degenerate_ = s == 0.0;

  const Int128 m_wide = static_cast<Int128>(d.m_raw_) << CurveConstants::kPowFrac;
  for (int k = 0; k < kGaussianLevels; ++k) {
    const Int128 mag = static_cast<Int128>(d.s_raw_) * (curve.pow(k) + curve.offset());
    d.g_magnitude_[k] = to_int16_saturated(round_shift(mag, CurveConstants::kPowFrac), fmt);
    d.g_value_[0][k] = to_int16_saturated(round_shift(mag + m_wide, CurveConstants::kPowFrac), fmt);
    d.g_value_[1][k] = to_int16_saturated(round_shift(-mag + m_wide, CurveConstants::kPowFrac), fmt);
  }

  if (!d.degenerate_) {
    for (int side = 0; side < 2; ++side) {
      std::vector<int> exps = ot_exponents[side];
      std::sort(exps.begin(), exps.end());
      if (exps.size() > static_cast<std::size_t>(kOutliersPerSide)) {
        throw Error(ErrorCode::kInvalidArgument, "at most 8 outlier bins per sign");
      }
      if (std::adjacent_find(exps.begin(), exps.end()) != exps.end()) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate outlier bin");
      }
      const double theta = side == 0 ? 1.0 : -1.0;
      for (int k : exps) {
        if (k < kOutlierMinInt || k > kOutlierMaxInt) {
          throw Error(ErrorCode::kOutOfRange, "outlier bin " + std::to_string(k) + " outside [8, 45]");
        }
        const auto raw = to_fixed(m + theta * s * curve.magnitude(k), fmt);
        d.ot_[side].push_back({k, static_cast<std::int16_t>(raw)});
      }
    }
  }
  d.build_table();
  return d;
}

TensorDictionary TensorDictionary::degenerate(double m, const CurveConstants& curve) {
  return assemble(0.0, m, choose_format(m, m), curve, {});
}

void TensorDictionary::build_table() {
  table_.clear();
  if (degenerate_) {
    table_.push_back({g_value_[0][0], Code::gaussian(0, 0)});
    return;
  }
  for (int sign = 0; sign < 2; ++sign) {
    for (int k = 0; k < kGaussianLevels; ++k) table_.push_back({g_value_[sign][k], Code::gaussian(sign, k)});
    for (std::size_t i = 0; i < ot_[sign].size(); ++i) {
      table_.push_back({ot_[sign][i].centroid, Code::outlier(sign, static_cast<int>(i))});
    }
  }
  // Value order; equal values keep the smaller magnitude (then positive) first.
  std::stable_sort(table_.begin(), table_.end(), [](const CentroidEntry& l, const CentroidEntry& r) {
    return l.value < r.value;
  });
}

bool TensorDictionary::strictly_sorted() const {
  for (std::size_t i = 1; i < table_.size(); ++i) {
    if (!(table_[i - 1].value < table_[i].value)) return false;
  }
  return true;
}

void TensorDictionary::validate_code(Code c) const {
  if (c.is_outlier() && static_cast<std::size_t>(c.index()) >= ot_[c.sign()].size()) {
    throw Error(ErrorCode::kOutOfRange, "outlier index " + std::to_string(c.index()) + " beyond " +
                                            std::to_string(ot_[c.sign()].size()) + " bins on that side");
  }
}

std::int16_t TensorDictionary::decode(Code c) const {
  validate_code(c);
  if (c.is_outlier()) return ot_[c.sign()][c.index()].centroid;
  return g_value_[c.sign()][c.index()];
}

Int128 TensorDictionary::decode_wide(Code c) const {
  validate_code(c);
  if (c.is_outlier()) return static_cast<Int128>(ot_[c.sign()][c.index()].centroid) << CurveConstants::kPowFrac;
  const Int128 mag = static_cast<Int128>(s_raw_) * (curve_.pow(c.index()) + curve_.offset());
  return c.theta() * mag + (static_cast<Int128>(m_raw_) << CurveConstants::kPowFrac);
}

Code TensorDictionary::nearest(std::int64_t raw) const {
  // Comparator bank: first centroid >= raw is CH, the one before it CL.
  auto hi = std::lower_bound(table_.begin(), table_.end(), raw,
                             [](const CentroidEntry& e, std::int64_t v) { return e.value < v; });
  if (hi == table_.begin()) return hi->code;
  auto lo = std::prev(hi);
  if (hi == table_.end()) {
    // Equal-valued run: take its first entry.
    while (lo != table_.begin() && std::prev(lo)->value == lo->value) --lo;
    return lo->code;
  }
  const std::int64_t dl = raw - lo->value;
  const std::int64_t dh = hi->value - raw;
  if (dl != dh) {
    if (dh < dl) return hi->code;
    while (lo != table_.begin() && std::prev(lo)->value == lo->value) --lo;
    return lo->code;
  }
  const int ml = std::abs(static_cast<int>(lo->value));
  const int mh = std::abs(static_cast<int>(hi->value));
  if (ml < mh) {
    while (lo != table_.begin() && std::prev(lo)->value == lo->value) --lo;
    return lo->code;
  }
  return hi->code;
}

AuxSums compute_aux(std::span<const Code> codes, const CurveConstants& curve) {
  AuxSums aux;
  for (Code c : codes) aux.add(c, curve);
  return aux;
}

std::size_t QuantizedTensor::outlier_count() const {
  return static_cast<std::size_t>(std::count_if(codes.begin(), codes.end(), [](Code c) { return c.is_outlier(); }));
}

double QuantizedTensor::outlier_fraction() const {
  return codes.empty() ? 0.0 : static_cast<double>(outlier_count()) / static_cast<double>(codes.size());
}

OutlierHistogram outlier_histogram(std::span<const double> values, double s, double m, const CurveConstants& curve) {
  std::array<double, kOutlierMaxInt + 1> mags{};
  for (int k = 0; k <= kOutlierMaxInt; ++k) mags[k] = curve.magnitude(k);
  std::array<double, kOutlierMaxInt> mids{};
  for (int k = 0; k < kOutlierMaxInt; ++k) mids[k] = 0.5 * (mags[k] + mags[k + 1]);

  OutlierHistogram h;
  for (double v : values) {
    const double z = (v - m) / s;
    const int side = z < 0.0 ? 1 : 0;
    // First midpoint >= |z|; a value exactly on a midpoint stays in the inner bin.
    const auto it = std::lower_bound(mids.begin(), mids.end(), std::fabs(z));
    const int k = static_cast<int>(it - mids.begin());
    if (k >= kOutlierMinInt) ++h.counts[side][k];
  }
  return h;
}

TensorDictionary build_tensor_dictionary(const TensorStats& stats, const ExpFit& fit, std::span<const double> values) {
  const CurveConstants curve = CurveConstants::from_fit(fit);
  if (!(stats.std > 0.0)) return TensorDictionary::degenerate(stats.mean, curve);

  const double s = stats.std;
  const double m = stats.mean;
  const OutlierHistogram hist = outlier_histogram(values, s, m, curve);

  std::array<std::vector<int>, 2> chosen;
  for (int side = 0; side < 2; ++side) {
    std::vector<int> candidates;
    for (int k = kOutlierMinInt; k <= kOutlierMaxInt; ++k) candidates.push_back(k);
    // Highest occupancy first; ties go to the smaller curve index.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](int l, int r) { return hist.counts[side][l] > hist.counts[side][r]; });
    chosen[side].assign(candidates.begin(), candidates.begin() + kOutliersPerSide);
    std::sort(chosen[side].begin(), chosen[side].end());
  }

  const double hi = m + s * std::max(curve.magnitude(chosen[0].back()), curve.magnitude(kGaussianLevels - 1));
  const double lo = m - s * std::max(curve.magnitude(chosen[1].back()), curve.magnitude(kGaussianLevels - 1));
  const QFormat fmt = choose_format(lo, hi);
  return TensorDictionary::assemble(s, m, fmt, curve, chosen);
}

TensorDictionary build_tensor_dictionary(const TensorStats& stats, const ExpFit& fit, const Tensor& values) {
  const auto v = values.values();
  return build_tensor_dictionary(stats, fit, std::span<const double>(v));
}

std::vector<Code> encode_values(std::span<const double> values, const TensorDictionary& dict) {
  std::vector<Code> codes(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) codes[i] = dict.nearest(to_fixed(values[i], dict.fmt()));
  return codes;
}

QuantizedTensor encode_tensor(const Tensor& t, std::shared_ptr<const TensorDictionary> dict) {
  if (!dict) throw Error(ErrorCode::kInvalidArgument, "encode_tensor needs a dictionary");
  QuantizedTensor q;
  q.shape = t.shape();
  const auto values = t.values();
  q.codes = encode_values(values, *dict);
  q.aux = compute_aux(q.codes, dict->curve());
  q.dict = std::move(dict);
  return q;
}

std::int16_t decode_code(Code c, const TensorDictionary& dict) { return dict.decode(c); }

Tensor decode_tensor(const QuantizedTensor& q) {
  if (!q.dict) throw Error(ErrorCode::kInvalidArgument, "quantized tensor has no dictionary");
  std::vector<std::int16_t> raw(q.codes.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = q.dict->decode(q.codes[i]);
  return Tensor::fx16(q.shape, std::move(raw), q.dict->fmt().frac);
}

TensorDictionary profile_activations(std::span<const Tensor> samples, const ExpFit& fit) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "profiling needs at least one sample tensor");
  std::vector<double> pooled;
  for (const Tensor& t : samples) {
    const auto v = t.values();
    pooled.insert(pooled.end(), v.begin(), v.end());
  }
  const TensorStats stats = compute_stats(pooled);
  return build_tensor_dictionary(stats, fit, std::span<const double>(pooled));
}

}  // namespace mky
