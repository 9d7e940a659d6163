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
#include <optional>
#include <span>
#include <vector>

#include "mky/quantizer.hpp"

namespace mky {

/// Occurrence counters of one dot product. Each Gaussian pair moves exactly
/// one slot of each file by +1 (signs agree) or -1 (signs differ).
struct CounterFile {
  std::array<std::int64_t, 2 * kGaussianLevels - 1> soi{};  // by int_A + int_W
  std::array<std::int64_t, kGaussianLevels> soa1{};         // by int_A
  std::array<std::int64_t, kGaussianLevels> sow1{};         // by int_W
  std::int64_t pom1 = 0;
  std::int64_t n_gauss = 0;  // Gaussian pairs consumed (unsigned count)
  int counter_bits = 32;

  std::int64_t limit() const { return (std::int64_t{1} << (counter_bits - 1)) - 1; }
  /// Adds another file's counts (used when draining narrow hardware counters).
  void merge(const CounterFile& other);
  void clear();
  bool same_counts(const CounterFile& other) const;
};

/// Fixed-point constants of one (activation, weight) tensor pair.
struct EngineConstants {
  Int128 s_a = 0;
  Int128 s_w = 0;
  Int128 m_a = 0;
  Int128 m_w = 0;
  int frac_a = 0;
  int frac_w = 0;
  CurveConstants curve;

  static EngineConstants make(const TensorDictionary& a, const TensorDictionary& w);
  /// Fractional bits of every exact term below.
  int product_frac() const { return frac_a + frac_w + CurveConstants::kProdFrac; }
};

struct DotTerms {
  Int256 soi = 0;
  Int256 soa1 = 0;
  Int256 soa2 = 0;
  Int256 sow1 = 0;
  Int256 sow2 = 0;
  Int256 pom1 = 0;
  Int256 pom2 = 0;
  Int256 pom3 = 0;
  Int256 pom4 = 0;
  Int256 outlier = 0;

  /// Fixed summation order: the terms as listed.
  Int256 total() const;
};

struct DotResult {
  std::int16_t value = 0;  // raw, in `fmt`
  QFormat fmt{16, 0};
  DotTerms terms;
  int product_frac = 0;
  bool saturated = false;

  Int256 exact() const { return terms.total(); }
  double real() const { return to_float(value, fmt); }
};

/// Routes one (activation, weight) code pair: Gaussian pairs update the
/// counters, anything touching an outlier is multiplied on centroids.
/// Throws kCounterOverflow if a counter would leave its signed range.
void accumulate_pair(CounterFile& cf, Int256& outlier_acc, Code a, Code w, const TensorDictionary& da,
                     const TensorDictionary& dw);

DotTerms compute_terms(const CounterFile& cf, const Int256& outlier_acc, const EngineConstants& consts,
                       const AuxSums& aux_a, const AuxSums& aux_w);

/// aux_a / aux_w must be restricted to the Gaussian pairs of this dot
/// product; a missing sum raises kMissingAux.
DotResult finalize(const CounterFile& cf, const Int256& outlier_acc, const EngineConstants& consts,
                   const std::optional<AuxSums>& aux_a, const std::optional<AuxSums>& aux_w, const QFormat& out);

/// Removes the positions where the other operand is an outlier.
AuxSums restrict_aux(const AuxSums& line, std::span<const Code> self, std::span<const std::size_t> other_outliers,
                     const CurveConstants& curve);

DotResult dot(std::span<const Code> a_row, std::span<const Code> w_col, const TensorDictionary& da,
              const TensorDictionary& dw, const QFormat& out);

struct GemmResult {
  Tensor output;  // fx16, shape [M, N]
  QFormat fmt;
  std::vector<Int256> exact;  // row-major, in product_frac units
  int product_frac = 0;
  std::size_t saturated = 0;
};

/// Matrix shape view used by gemm: rank-1 activations are a single row,
/// rank-1 weights a single column.
struct MatrixDims {
  std::size_t rows = 0;
  std::size_t cols = 0;
};
MatrixDims activation_dims(const Shape& shape);
MatrixDims weight_dims(const Shape& shape);

/// A is [M, K], W is [K, N]. Without an output format, the finest 16-bit
/// format that holds every exact result is chosen.
GemmResult gemm(const QuantizedTensor& a, const QuantizedTensor& w, std::optional<QFormat> out = std::nullopt);

/// Encodes a layer output with the next layer's dictionary; aux sums for the
/// next layer come out of the same pass.
QuantizedTensor requantize(const Tensor& out, std::shared_ptr<const TensorDictionary> next);

}  // namespace mky
