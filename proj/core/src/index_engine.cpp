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


#include "mky/index_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mky/error.hpp"

namespace mky {
namespace {

void bump(std::int64_t& counter, int delta, std::int64_t limit) {
  const std::int64_t next = counter + delta;
  if (next > limit || next < -limit - 1) {
    throw Error(ErrorCode::kCounterOverflow, "occurrence counter left its signed range");
  }
  counter = next;
}

double to_real(const Int256& exact, int frac) { return std::ldexp(exact.convert_to<double>(), -frac); }

std::vector<std::size_t> outlier_positions(std::span<const Code> codes) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i].is_outlier()) pos.push_back(i);
  }
  return pos;
}

}  // namespace

void CounterFile::merge(const CounterFile& other) {
  for (std::size_t t = 0; t < soi.size(); ++t) soi[t] += other.soi[t];
  for (std::size_t i = 0; i < soa1.size(); ++i) {
    soa1[i] += other.soa1[i];
    sow1[i] += other.sow1[i];
  }
  pom1 += other.pom1;
  n_gauss += other.n_gauss;
}

void CounterFile::clear() {
  soi.fill(0);
  soa1.fill(0);
  sow1.fill(0);
  pom1 = 0;
  n_gauss = 0;
}

bool CounterFile::same_counts(const CounterFile& other) const {
  return soi == other.soi && soa1 == other.soa1 && sow1 == other.sow1 && pom1 == other.pom1 &&
         n_gauss == other.n_gauss;
}

EngineConstants EngineConstants::make(const TensorDictionary& a, const TensorDictionary& w) {
  if (!(a.curve() == w.curve())) {
    throw Error(ErrorCode::kInvalidArgument, "activation and weight dictionaries use different curves");
  }
  EngineConstants c;
  c.s_a = a.s_raw();
  c.s_w = w.s_raw();
  c.m_a = a.m_raw();
  c.m_w = w.m_raw();
  c.frac_a = a.fmt().frac;
  c.frac_w = w.fmt().frac;
  c.curve = a.curve();
  return c;
}

Int256 DotTerms::total() const {
  Int256 sum = soi;
  sum += soa1;
  sum += soa2;
  sum += sow1;
  sum += sow2;
  sum += pom1;
  sum += pom2;
  sum += pom3;
  sum += pom4;
  sum += outlier;
  return sum;
}

void accumulate_pair(CounterFile& cf, Int256& outlier_acc, Code a, Code w, const TensorDictionary& da,
                     const TensorDictionary& dw) {
  if (a.is_outlier() || w.is_outlier()) {
    outlier_acc += widen(da.decode_wide(a)) * widen(dw.decode_wide(w));
    return;
  }
  const int delta = (a.sign() ^ w.sign()) ? -1 : 1;
  const std::int64_t limit = cf.limit();
  bump(cf.soi[a.index() + w.index()], delta, limit);
  bump(cf.soa1[a.index()], delta, limit);
  bump(cf.sow1[w.index()], delta, limit);
  bump(cf.pom1, delta, limit);
  ++cf.n_gauss;
}

DotTerms compute_terms(const CounterFile& cf, const Int256& outlier_acc, const EngineConstants& consts,
                       const AuxSums& aux_a, const AuxSums& aux_w) {
  const CurveConstants& curve = consts.curve;
  const Int256 scale = widen(consts.s_a) * widen(consts.s_w);
  const Int256 offset = widen(curve.offset());
  const Int256 shift_a = widen(consts.m_a) << CurveConstants::kPowFrac;
  const Int256 shift_w = widen(consts.m_w) << CurveConstants::kPowFrac;

  Int256 soi_sum = 0;
  for (std::size_t t = 0; t < cf.soi.size(); ++t) soi_sum += curve.pow_sum(static_cast<int>(t)) * cf.soi[t];
  Int256 soa1_sum = 0;
  Int256 sow1_sum = 0;
  for (int k = 0; k < kGaussianLevels; ++k) {
    soa1_sum += widen(curve.pow(k)) * cf.soa1[k];
    sow1_sum += widen(curve.pow(k)) * cf.sow1[k];
  }

  DotTerms t;
  t.soi = scale * soi_sum;
  t.soa1 = scale * offset * soa1_sum;
  t.soa2 = widen(consts.s_a) * shift_w * widen(aux_a.sum_pow);
  t.sow1 = scale * offset * sow1_sum;
  t.sow2 = widen(consts.s_w) * shift_a * widen(aux_w.sum_pow);
  t.pom1 = scale * offset * offset * cf.pom1;
  t.pom2 = widen(consts.s_a) * shift_w * offset * aux_a.sum_sign;
  t.pom3 = widen(consts.s_w) * shift_a * offset * aux_w.sum_sign;
  t.pom4 = shift_a * shift_w * cf.n_gauss;
  t.outlier = outlier_acc;
  return t;
}

DotResult finalize(const CounterFile& cf, const Int256& outlier_acc, const EngineConstants& consts,
                   const std::optional<AuxSums>& aux_a, const std::optional<AuxSums>& aux_w, const QFormat& out) {
  if (!aux_a || !aux_w) throw Error(ErrorCode::kMissingAux, "finalize needs both restricted aux sums");
  if (std::abs(aux_a->sum_sign) > cf.n_gauss || std::abs(aux_w->sum_sign) > cf.n_gauss) {
    throw Error(ErrorCode::kInvalidArgument, "aux sign sums exceed the Gaussian pair count");
  }
  out.validate();
  DotResult r;
  r.terms = compute_terms(cf, outlier_acc, consts, *aux_a, *aux_w);
  r.product_frac = consts.product_frac();
  r.fmt = out;
  r.value = static_cast<std::int16_t>(
      narrow_round(r.terms.total(), r.product_frac, out.frac, out.min_raw(), out.max_raw(), &r.saturated));
  return r;
}

AuxSums restrict_aux(const AuxSums& line, std::span<const Code> self, std::span<const std::size_t> other_outliers,
                     const CurveConstants& curve) {
  AuxSums r = line;
  for (std::size_t p : other_outliers) r.remove(self[p], curve);
  return r;
}

DotResult dot(std::span<const Code> a_row, std::span<const Code> w_col, const TensorDictionary& da,
              const TensorDictionary& dw, const QFormat& out) {
  if (a_row.size() != w_col.size()) {
    throw Error(ErrorCode::kShapeMismatch, "dot operands differ in length: " + std::to_string(a_row.size()) +
                                               " vs " + std::to_string(w_col.size()));
  }
  out.validate();
  const EngineConstants consts = EngineConstants::make(da, dw);
  const auto ot_a = outlier_positions(a_row);
  const auto ot_w = outlier_positions(w_col);
  const AuxSums aux_a = restrict_aux(compute_aux(a_row, consts.curve), a_row, ot_w, consts.curve);
  const AuxSums aux_w = restrict_aux(compute_aux(w_col, consts.curve), w_col, ot_a, consts.curve);

  CounterFile cf;
  Int256 acc = 0;
  for (std::size_t i = 0; i < a_row.size(); ++i) accumulate_pair(cf, acc, a_row[i], w_col[i], da, dw);
  return finalize(cf, acc, consts, aux_a, aux_w, out);
}

MatrixDims activation_dims(const Shape& shape) {
  if (shape.size() == 1) return {1, shape[0]};
  if (shape.size() == 2) return {shape[0], shape[1]};
  throw Error(ErrorCode::kShapeMismatch, "activations must be rank 1 or 2, got " + shape_string(shape));
}

MatrixDims weight_dims(const Shape& shape) {
  if (shape.size() == 1) return {shape[0], 1};
  if (shape.size() == 2) return {shape[0], shape[1]};
  throw Error(ErrorCode::kShapeMismatch, "weights must be rank 1 or 2, got " + shape_string(shape));
}

GemmResult gemm(const QuantizedTensor& a, const QuantizedTensor& w, std::optional<QFormat> out) {
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
  const EngineConstants consts = EngineConstants::make(*a.dict, *w.dict);
  const CurveConstants& curve = consts.curve;

  // Weight columns contiguous; their outlier positions and aux sums are
  // static, activation rows' come out of requantization.
  std::vector<Code> wt(k * n);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < n; ++j) wt[j * k + p] = w.codes[p * n + j];
  }
  std::vector<AuxSums> aux_rows(m);
  std::vector<std::vector<std::size_t>> ot_rows(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::span<const Code> row(a.codes.data() + i * k, k);
    aux_rows[i] = compute_aux(row, curve);
    ot_rows[i] = outlier_positions(row);
  }
  std::vector<AuxSums> aux_cols(n);
  std::vector<std::vector<std::size_t>> ot_cols(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::span<const Code> col(wt.data() + j * k, k);
    aux_cols[j] = compute_aux(col, curve);
    ot_cols[j] = outlier_positions(col);
  }

  GemmResult result;
  result.product_frac = consts.product_frac();
  result.exact.resize(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const std::span<const Code> row(a.codes.data() + i * k, k);
    for (std::size_t j = 0; j < n; ++j) {
      const std::span<const Code> col(wt.data() + j * k, k);
      CounterFile cf;
      Int256 acc = 0;
      for (std::size_t p = 0; p < k; ++p) accumulate_pair(cf, acc, row[p], col[p], *a.dict, *w.dict);
      const AuxSums ra = restrict_aux(aux_rows[i], row, ot_cols[j], curve);
      const AuxSums rw = restrict_aux(aux_cols[j], col, ot_rows[i], curve);
      result.exact[i * n + j] = compute_terms(cf, acc, consts, ra, rw).total();
    }
  }

  if (out) {
    out->validate();
    result.fmt = *out;
  } else {
    double lo = 0.0;
    double hi = 0.0;
    for (const Int256& e : result.exact) {
      const double v = to_real(e, result.product_frac);
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

QuantizedTensor requantize(const Tensor& out, std::shared_ptr<const TensorDictionary> next) {
  return encode_tensor(out, std::move(next));
}

}  // namespace mky
