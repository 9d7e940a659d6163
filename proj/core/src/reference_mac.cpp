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


#include "mky/reference_mac.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mky/error.hpp"

namespace mky {

DotResult reference_dot(std::span<const Code> a_row, std::span<const Code> w_col, const TensorDictionary& da,
                        const TensorDictionary& dw, const QFormat& out) {
  if (a_row.size() != w_col.size()) {
    throw Error(ErrorCode::kShapeMismatch, "dot operands differ in length: " + std::to_string(a_row.size()) +
                                               " vs " + std::to_string(w_col.size()));
  }
  out.validate();
  Int256 acc = 0;
  for (std::size_t i = 0; i < a_row.size(); ++i) acc += widen(da.decode_wide(a_row[i])) * widen(dw.decode_wide(w_col[i]));
  DotResult r;
  r.terms.outlier = acc;  // the whole sum, no decomposition
  r.product_frac = da.wide_frac() + dw.wide_frac();
  r.fmt = out;
  r.value = static_cast<std::int16_t>(
      narrow_round(acc, r.product_frac, out.frac, out.min_raw(), out.max_raw(), &r.saturated));
  return r;
}

GemmResult reference_gemm(const QuantizedTensor& a, const QuantizedTensor& w, std::optional<QFormat> out) {
  if (!a.dict || !w.dict) throw Error(ErrorCode::kInvalidArgument, "gemm operands need dictionaries");
  const MatrixDims da = activation_dims(a.shape);
  const MatrixDims dw = weight_dims(w.shape);
  if (da.cols != dw.rows) {
    throw Error(ErrorCode::kShapeMismatch,
                "inner dimensions differ: " + shape_string(a.shape) + " x " + shape_string(w.shape));
  }
  const std::size_t m = da.rows;
  const std::size_t k = da.cols;
  const std::size_t n = dw.cols;

  std::vector<Int256> a_wide(a.codes.size());
  for (std::size_t i = 0; i < a_wide.size(); ++i) a_wide[i] = widen(a.dict->decode_wide(a.codes[i]));
  std::vector<Int256> w_wide(w.codes.size());
  for (std::size_t i = 0; i < w_wide.size(); ++i) w_wide[i] = widen(w.dict->decode_wide(w.codes[i]));

  GemmResult result;
  result.product_frac = a.dict->wide_frac() + w.dict->wide_frac();
  result.exact.assign(m * n, Int256(0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const Int256& av = a_wide[i * k + p];
      for (std::size_t j = 0; j < n; ++j) result.exact[i * n + j] += av * w_wide[p * n + j];
    }
  }

  if (out) {
    out->validate();
    result.fmt = *out;
  } else {
    double lo = 0.0;
    double hi = 0.0;
    for (const Int256& e : result.exact) {
      const double v = std::ldexp(e.convert_to<double>(), -result.product_frac);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    result.fmt = choose_format(lo, hi, 16);
  }
  if (result.fmt.bits != 16) throw Error(ErrorCode::kInvalidArgument, "gemm output is 16-bit fixed point");
  std::vector<std::int16_t> raw(m * n);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    bool sat = false;
    raw[i] = static_cast<std::int16_t>(narrow_round(result.exact[i], result.product_frac, result.fmt.frac,
                                                    result.fmt.min_raw(), result.fmt.max_raw(), &sat));
    result.saturated += sat ? 1 : 0;
  }
  result.output = Tensor::fx16({m, n}, std::move(raw), result.fmt.frac);
  return result;
}

}  // namespace mky
