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

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the engine, packer or simulator.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mky/quantizer.hpp"

namespace mky::testing {

using BigInt = boost::multiprecision::cpp_int;

/// Exact decoded value of a code, in units of 2^-(frac + 84), rebuilt from
/// the dictionary's raw scale, shift, curve integers and outlier table.
BigInt oracle_decode_wide(const TensorDictionary& d, Code c);

/// Rounds value / 2^shift half away from zero.
BigInt oracle_round_shift(const BigInt& value, int shift);

/// Saturating narrow of an exact sum with `from_frac` fractional bits.
std::int16_t oracle_narrow(const BigInt& exact, int from_frac, const QFormat& out, bool* saturated = nullptr);

/// Centroid multiply-accumulate over decoded operands.
struct OracleDot {
  BigInt exact;
  int frac = 0;
  std::int16_t value = 0;
  bool saturated = false;
};
OracleDot oracle_dot(std::span<const Code> a, std::span<const Code> w, const TensorDictionary& da,
                     const TensorDictionary& dw, const QFormat& out);

/// Row-major [M,N] oracle GEMM; A is [M,K], W is [K,N].
std::vector<std::int16_t> oracle_gemm(const QuantizedTensor& a, const QuantizedTensor& w, const QFormat& out);

/// Nearest centroid by scanning every code of the dictionary.
/// Returns the best absolute distance found.
std::int64_t brute_nearest_distance(const TensorDictionary& d, std::int64_t raw);

/// O(n^3) Ward agglomerative clustering: every step scans all cluster pairs.
std::vector<double> brute_ward(std::span<const double> values, std::size_t k);

/// RMSE of uniform symmetric quantization over [-r, r] with `levels` levels
/// (odd counts include zero; even counts are midrise).
double uniform_rmse(std::span<const double> values, double r, int levels);

/// Random curve with a in (1.05, 1.6], b in [-1, 0].
CurveConstants random_curve(std::mt19937_64& rng);

/// Random dictionary with every centroid representable in its format.
TensorDictionary random_dictionary(std::mt19937_64& rng, const CurveConstants& curve);

/// Random codes valid for `d`; each code is an outlier with probability `rate`.
std::vector<Code> random_codes(std::mt19937_64& rng, const TensorDictionary& d, std::size_t n, double rate);

/// Gaussian samples from a portable generator.
std::vector<double> normal_samples(std::uint64_t seed, std::size_t n, double mean = 0.0, double std = 1.0);

}  // namespace mky::testing
