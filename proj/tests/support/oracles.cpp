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


#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace mky::testing {

BigInt oracle_decode_wide(const TensorDictionary& d, Code c) {
  if (c.is_outlier()) {
    return BigInt(d.outliers(c.sign())[static_cast<std::size_t>(c.index())].centroid) << 84;
  }
  // theta * s * (a^k + b) + m with a = alpha/2^12, b = beta/2^13, all scaled by 2^84.
  const BigInt alpha = d.curve().alpha();
  BigInt pow = 1;
  for (int i = 0; i < c.index(); ++i) pow *= alpha;
  const BigInt curve = (pow << (12 * (7 - c.index()))) + (BigInt(d.curve().beta()) << (84 - 13));
  BigInt v = BigInt(d.s_raw()) * curve;
  if (c.sign()) v = -v;
  return v + (BigInt(d.m_raw()) << 84);
}

BigInt oracle_round_shift(const BigInt& value, int shift) {
  if (shift <= 0) return value << -shift;
  const BigInt div = BigInt(1) << shift;
  const BigInt mag = value < 0 ? BigInt(-value) : value;
  BigInt q = mag / div;
  const BigInt r = mag % div;
  if (r * 2 >= div) q += 1;
  return value < 0 ? BigInt(-q) : q;
}

std::int16_t oracle_narrow(const BigInt& exact, int from_frac, const QFormat& out, bool* saturated) {
  const BigInt r = oracle_round_shift(exact, from_frac - out.frac);
  const BigInt hi = (BigInt(1) << (out.bits - 1)) - 1;
  const BigInt lo = -(BigInt(1) << (out.bits - 1));
  bool sat = r > hi || r < lo;
  if (saturated != nullptr) *saturated = sat;
  if (r > hi) return static_cast<std::int16_t>(hi);
  if (r < lo) return static_cast<std::int16_t>(lo);
  return static_cast<std::int16_t>(r);
}

OracleDot oracle_dot(std::span<const Code> a, std::span<const Code> w, const TensorDictionary& da,
                     const TensorDictionary& dw, const QFormat& out) {
  // Histogram the (code, code) pairs, then one product per distinct pair.
  std::array<std::array<std::uint64_t, 32>, 32> hist{};
  for (std::size_t i = 0; i < a.size(); ++i) ++hist[a[i].bits()][w[i].bits()];
  OracleDot r;
  r.frac = da.fmt().frac + dw.fmt().frac + 168;
  std::array<BigInt, 32> wa;
  std::array<BigInt, 32> ww;
  for (int c = 0; c < 32; ++c) {
    const Code code = Code::from_bits(static_cast<std::uint8_t>(c));
    const bool va = !code.is_outlier() || static_cast<std::size_t>(code.index()) < da.outliers(code.sign()).size();
    const bool vw = !code.is_outlier() || static_cast<std::size_t>(code.index()) < dw.outliers(code.sign()).size();
    if (va) wa[c] = oracle_decode_wide(da, code);
    if (vw) ww[c] = oracle_decode_wide(dw, code);
  }
  for (int i = 0; i < 32; ++i) {
    for (int j = 0; j < 32; ++j) {
      if (hist[i][j] != 0) r.exact += BigInt(hist[i][j]) * wa[i] * ww[j];
    }
  }
  r.value = oracle_narrow(r.exact, r.frac, out, &r.saturated);
  return r;
}

std::vector<std::int16_t> oracle_gemm(const QuantizedTensor& a, const QuantizedTensor& w, const QFormat& out) {
  const std::size_t m = a.shape.size() == 1 ? 1 : a.shape[0];
  const std::size_t k = a.shape.back();
  const std::size_t n = w.shape.size() == 1 ? 1 : w.shape[1];
  std::vector<std::int16_t> res(m * n);
  std::vector<Code> col(k);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < k; ++p) col[p] = w.codes[p * n + j];
    for (std::size_t i = 0; i < m; ++i) {
      res[i * n + j] = oracle_dot(std::span<const Code>(a.codes).subspan(i * k, k), col, *a.dict, *w.dict, out).value;
    }
  }
  return res;
}

std::int64_t brute_nearest_distance(const TensorDictionary& d, std::int64_t raw) {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (int sign = 0; sign < 2; ++sign) {
    for (int k = 0; k < kGaussianLevels; ++k) best = std::min(best, std::abs(raw - d.decode(Code::gaussian(sign, k))));
    for (std::size_t i = 0; i < d.outliers(sign).size(); ++i) {
      best = std::min(best, std::abs(raw - d.decode(Code::outlier(sign, static_cast<int>(i)))));
    }
  }
  return best;
}

std::vector<double> brute_ward(std::span<const double> values, std::size_t k) {
  struct Cluster {
    double sum;
    double count;
  };
  std::vector<Cluster> cl;
  for (double v : values) cl.push_back({v, 1.0});
  while (cl.size() > k) {
    std::size_t bi = 0;
    std::size_t bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cl.size(); ++i) {
      for (std::size_t j = i + 1; j < cl.size(); ++j) {
        const double d = cl[i].sum / cl[i].count - cl[j].sum / cl[j].count;
        const double cost = cl[i].count * cl[j].count / (cl[i].count + cl[j].count) * d * d;
        if (cost < best) {
          best = cost;
          bi = i;
          bj = j;
        }
      }
    }
    cl[bi].sum += cl[bj].sum;
    cl[bi].count += cl[bj].count;
    cl.erase(cl.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  std::vector<double> means;
  for (const auto& c : cl) means.push_back(c.sum / c.count);
  std::sort(means.begin(), means.end());
  return means;
}

double uniform_rmse(std::span<const double> values, double r, int levels) {
  double sq = 0.0;
  if (levels % 2 == 1) {
    const int half = levels / 2;
    const double step = r / half;
    for (double v : values) {
      const double q = std::clamp(std::round(v / step), -double(half), double(half)) * step;
      sq += (v - q) * (v - q);
    }
  } else {
    const double step = 2.0 * r / levels;
    for (double v : values) {
      const double idx = std::clamp(std::floor(v / step), -double(levels / 2), double(levels / 2 - 1));
      const double q = (idx + 0.5) * step;
      sq += (v - q) * (v - q);
    }
  }
  return std::sqrt(sq / static_cast<double>(values.size()));
}

CurveConstants random_curve(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(1.05, 1.6);
  std::uniform_real_distribution<double> b(-1.0, 0.0);
  ExpFit fit;
  fit.a = a(rng);
  fit.b = b(rng);
  return CurveConstants::from_fit(fit);
}

TensorDictionary random_dictionary(std::mt19937_64& rng, const CurveConstants& curve) {
  std::uniform_int_distribution<int> frac_dist(2, 15);
  const QFormat fmt{16, frac_dist(rng)};
  const double range = fmt.max_value();
  // Largest usable outlier bin, then a scale that keeps it in range.
  int k_max = std::uniform_int_distribution<int>(8, 24)(rng);
  const double s_cap = 0.45 * range / curve.magnitude(k_max);
  const double s = std::uniform_real_distribution<double>(0.05, 1.0)(rng) * s_cap;
  const double m = std::uniform_real_distribution<double>(-0.45, 0.45)(rng) * range;
  std::array<std::vector<int>, 2> ot;
  for (auto& side : ot) {
    std::vector<int> pool;
    for (int k = kOutlierMinInt; k <= k_max; ++k) pool.push_back(k);
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto count = std::uniform_int_distribution<std::size_t>(0, std::min<std::size_t>(8, pool.size()))(rng);
    side.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
  }
  return TensorDictionary::assemble(s, m, fmt, curve, ot);
}

std::vector<Code> random_codes(std::mt19937_64& rng, const TensorDictionary& d, std::size_t n, double rate) {
  std::bernoulli_distribution is_ot(rate);
  std::uniform_int_distribution<int> bit(0, 1);
  std::uniform_int_distribution<int> idx(0, kGaussianLevels - 1);
  std::vector<Code> codes(n);
  for (auto& c : codes) {
    const int sign = bit(rng);
    const auto bins = d.outliers(sign).size();
    if (is_ot(rng) && bins > 0) {
      c = Code::outlier(sign, std::uniform_int_distribution<int>(0, static_cast<int>(bins) - 1)(rng));
    } else {
      c = Code::gaussian(sign, idx(rng));
    }
  }
  return codes;
}

std::vector<double> normal_samples(std::uint64_t seed, std::size_t n, double mean, double std) {
  std::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> dist(mean, std);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace mky::testing
