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


// Acceptance suite: one pass/fail line per criterion. With no arguments
// every criterion runs; otherwise only the named ones.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "mky/accel_sim.hpp"
#include "mky/error.hpp"
#include "mky/fixed_point.hpp"
#include "mky/golden_dict.hpp"
#include "mky/index_engine.hpp"
#include "mky/packer.hpp"
#include "mky/quantizer.hpp"
#include "oracles.hpp"

namespace {

using namespace mky;
namespace t = mky::testing;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Fit used by the stages downstream of the golden dictionary.
const ExpFit& pipeline_fit() {
  static const ExpFit fit = [] {
    GoldenOptions o;
    return fit_exponential(generate_golden_dictionary(o));
  }();
  return fit;
}

QuantizedTensor random_quantized(std::mt19937_64& rng, const TensorDictionary& d, Shape shape, double rate) {
  QuantizedTensor q;
  q.shape = std::move(shape);
  q.dict = std::make_shared<const TensorDictionary>(d);
  q.codes = t::random_codes(rng, d, element_count(q.shape), rate);
  q.aux = compute_aux(q.codes, d.curve());
  return q;
}

// Output format near the finest that holds the exact result, sometimes finer
// so that saturation is exercised too.
QFormat output_format(std::mt19937_64& rng, const t::BigInt& exact, int frac) {
  const double v = std::ldexp(exact.convert_to<double>(), -frac);
  const QFormat base = choose_format(-std::fabs(v), std::fabs(v));
  const int shift = std::uniform_int_distribution<int>(-1, 4)(rng);
  return {16, std::clamp(base.frac - shift, 0, 15)};
}

Outcome curve_fit_constants() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  GoldenOptions opt;  // 50,000 samples, 16 clusters, 10 repeats, seed 0
  try {
    const GoldenDictionary gd = generate_golden_dictionary(opt);
    const ExpFit fit = fit_exponential(gd);
    const double secs = seconds_since(t0);
    o.detail << "a=" << fit.a << " (want 1.179+-0.015) b=" << fit.b << " (want -0.977+-0.02) runtime=" << secs
             << "s; ";
    o.require(std::fabs(fit.a - 1.179) <= 0.015, "a out of tolerance");
    o.require(std::fabs(fit.b + 0.977) <= 0.02, "b out of tolerance");
    o.require(secs < 60.0, "runtime over 60 s");
  } catch (const Error& e) {
    o.require(false, e.what());
  }
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(0x5eed0001);
  constexpr int kCases = 100'000;
  std::size_t mismatches = 0;
  std::size_t saturated = 0;
  std::size_t pairs = 0;
  for (int c = 0; c < kCases; ++c) {
    const CurveConstants curve = t::random_curve(rng);
    const TensorDictionary da = t::random_dictionary(rng, curve);
    const TensorDictionary dw = t::random_dictionary(rng, curve);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 4096)(rng);
    double rate = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (c % 10 == 0) rate = 0.0;
    if (c % 10 == 1) rate = 1.0;
    const auto a = t::random_codes(rng, da, n, rate);
    const auto w = t::random_codes(rng, dw, n, rate);
    const t::OracleDot probe = t::oracle_dot(a, w, da, dw, {16, 0});
    const QFormat out = output_format(rng, probe.exact, probe.frac);
    const t::OracleDot ref = t::oracle_dot(a, w, da, dw, out);
    const DotResult got = dot(a, w, da, dw, out);
    if (got.value != ref.value || got.exact() != Int256(ref.exact) || got.saturated != ref.saturated) ++mismatches;
    saturated += ref.saturated ? 1 : 0;
    pairs += n;
  }
  const double secs = seconds_since(t0);
  o.detail << kCases << " dot products, " << pairs << " pairs, " << saturated << " saturating, mismatches="
           << mismatches << " runtime=" << secs << "s; ";
  o.require(mismatches == 0, "engine differs from centroid MAC");
  o.require(secs < 300.0, "runtime over 5 min");
  return o;
}

Outcome gemm_equivalence() {
  Outcome o;
  std::mt19937_64 rng(0x5eed0002);
  constexpr std::size_t M = 64, K = 64, N = 64;
  for (int trial = 0; trial < 4; ++trial) {
    const CurveConstants curve = t::random_curve(rng);
    const auto a = random_quantized(rng, t::random_dictionary(rng, curve), {M, K}, 0.05 * trial);
    const auto w = random_quantized(rng, t::random_dictionary(rng, curve), {K, N}, 0.02 * trial);
    const GemmResult g = gemm(a, w);
    const auto ref = t::oracle_gemm(a, w, g.fmt);
    const std::vector<std::int16_t> got(g.output.raw().begin(), g.output.raw().end());
    o.require(got == ref, "gemm differs from oracle gemm");

    // Permute the inner dimension consistently on both operands.
    std::vector<std::size_t> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    QuantizedTensor ap = a;
    QuantizedTensor wp = w;
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t p = 0; p < K; ++p) ap.codes[i * K + p] = a.codes[i * K + perm[p]];
    }
    for (std::size_t p = 0; p < K; ++p) {
      for (std::size_t j = 0; j < N; ++j) wp.codes[p * N + j] = w.codes[perm[p] * N + j];
    }
    o.require(gemm(ap, wp, g.fmt).output == g.output, "inner-dimension permutation changed outputs");

    // Accumulate every output in a shuffled pair order.
    const EngineConstants consts = EngineConstants::make(*a.dict, *w.dict);
    std::vector<Code> col(K);
    bool same = true;
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t p = 0; p < K; ++p) col[p] = w.codes[p * N + j];
      std::vector<std::size_t> ot_w;
      for (std::size_t p = 0; p < K; ++p) {
        if (col[p].is_outlier()) ot_w.push_back(p);
      }
      for (std::size_t i = 0; i < M; ++i) {
        const std::span<const Code> row(a.codes.data() + i * K, K);
        std::vector<std::size_t> ot_a;
        for (std::size_t p = 0; p < K; ++p) {
          if (row[p].is_outlier()) ot_a.push_back(p);
        }
        std::shuffle(perm.begin(), perm.end(), rng);
        CounterFile cf;
        Int256 acc = 0;
        for (std::size_t p : perm) accumulate_pair(cf, acc, row[p], col[p], *a.dict, *w.dict);
        const auto aux_a = restrict_aux(compute_aux(row, curve), row, ot_w, curve);
        const auto aux_w = restrict_aux(compute_aux(col, curve), col, ot_a, curve);
        const DotResult r = finalize(cf, acc, consts, aux_a, aux_w, g.fmt);
        same = same && r.value == g.output.raw()[i * N + j];
      }
    }
    o.require(same, "pair-order permutation changed outputs");
  }
  o.detail << "4 random 64x64x64 GEMMs, outlier rates 0-15%, two permutation checks each; ";
  return o;
}

Outcome counter_conservation() {
  Outcome o;
  std::mt19937_64 rng(0x5eed0003);
  constexpr int kCases = 20'000;
  std::size_t violations = 0;
  for (int c = 0; c < kCases; ++c) {
    const CurveConstants curve = t::random_curve(rng);
    const TensorDictionary da = t::random_dictionary(rng, curve);
    const TensorDictionary dw = t::random_dictionary(rng, curve);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 4096)(rng);
    const double rate = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto a = t::random_codes(rng, da, n, rate);
    const auto w = t::random_codes(rng, dw, n, rate);
    CounterFile cf;
    Int256 acc = 0;
    std::int64_t gauss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      accumulate_pair(cf, acc, a[i], w[i], da, dw);
      gauss += (a[i].is_outlier() || w[i].is_outlier()) ? 0 : 1;
    }
    const auto sum = [](const auto& arr) { return std::accumulate(arr.begin(), arr.end(), std::int64_t{0}); };
    const bool ok = sum(cf.soi) == cf.pom1 && sum(cf.soa1) == cf.pom1 && sum(cf.sow1) == cf.pom1 &&
                    cf.n_gauss == gauss && std::abs(cf.pom1) <= cf.n_gauss;
    violations += ok ? 0 : 1;
  }
  o.detail << kCases << " random cases, violations=" << violations << "; ";
  o.require(violations == 0, "counter files disagree");
  return o;
}

Outcome packed_format() {
  Outcome o;
  std::mt19937_64 rng(0x5eed0004);
  const CurveConstants curve = CurveConstants::from_fit(pipeline_fit());
  constexpr int kTensors = 10'000;
  std::size_t round_trip_failures = 0;
  std::size_t formula_failures = 0;
  for (int c = 0; c < kTensors; ++c) {
    const TensorDictionary d = t::random_dictionary(rng, curve);
    const bool aligned = c % 2 == 0;
    const std::size_t n = aligned ? 64 * std::uniform_int_distribution<std::size_t>(1, 64)(rng)
                                  : std::uniform_int_distribution<std::size_t>(1, 4096)(rng);
    const double rate = std::uniform_real_distribution<double>(0.0, 1.0)(rng) *
                        (c % 3 == 0 ? 1.0 : 0.1);
    const auto q = random_quantized(rng, d, {n}, rate);
    const PackedTensor p = pack(q);
    const auto bytes = serialize_packed(p);
    const QuantizedTensor back = unpack(parse_packed(bytes), q.dict);
    if (back.codes != q.codes || !(back.aux == q.aux) || serialize_packed(pack(back)) != bytes) ++round_trip_failures;
    const PackedSize s = measure(p);
    const std::uint64_t k = q.outlier_count();
    const std::uint64_t groups = (n + 63) / 64;
    bool ok = s.payload_bits() == 4 * n + 8 * groups + 6 * k;
    if (aligned) {
      // 4 + 8/64 + 6 k/n, checked as integers scaled by 64 and in floating point.
      ok = ok && s.payload_bits() * 64 == 264 * n + 384 * k;
      const double closed = 4.0 + 8.0 / 64.0 + 6.0 * static_cast<double>(k) / static_cast<double>(n);
      ok = ok && std::fabs(s.bits_per_value - closed) <= 1e-12;
    }
    formula_failures += ok ? 0 : 1;
  }
  // Compression at 1.5% outliers versus 32-bit storage.
  const TensorDictionary d = TensorDictionary::assemble(
      1.0, 0.0, {16, 10}, curve, {{{8, 9, 10, 11, 12, 13, 14, 15}, {8, 9, 10, 11, 12, 13, 14, 15}}});
  const std::size_t n = 768 * 768;
  QuantizedTensor q;
  q.shape = {n};
  q.dict = std::make_shared<const TensorDictionary>(d);
  q.codes.assign(n, Code::gaussian(0, 1));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t i = 0; i < n * 15 / 1000; ++i) q.codes[idx[i]] = Code::outlier(0, 0);
  const PackedSize s = measure(pack(q));
  o.detail << kTensors << " tensors, round-trip failures=" << round_trip_failures
           << ", bits/value formula failures=" << formula_failures << ", 1.5% outliers: " << s.bits_per_value
           << " bits/value, compression " << s.compression_vs_fp32 << "x; ";
  o.require(round_trip_failures == 0, "round trip");
  o.require(formula_failures == 0, "bits/value formula");
  o.require(s.compression_vs_fp32 >= 7.5, "compression below 7.5x");
  return o;
}

double outlier_fraction_of(const std::vector<double>& v) {
  const auto d = std::make_shared<const TensorDictionary>(
      build_tensor_dictionary(compute_stats(v), pipeline_fit(), std::span<const double>(v)));
  const auto codes = encode_values(v, *d);
  const auto k = std::count_if(codes.begin(), codes.end(), [](Code c) { return c.is_outlier(); });
  return static_cast<double>(k) / static_cast<double>(v.size());
}

Outcome gaussian_fraction() {
  Outcome o;
  double worst = 0.0;
  std::uint64_t seed = 100;
  for (double m : {-100.0, -1.0, 0.0, 0.5, 30.0}) {
    for (double s : {1e-3, 0.05, 1.0, 20.0}) {
      const auto v = t::normal_samples(seed++, 100'000, m, s);
      worst = std::max(worst, outlier_fraction_of(v));
    }
  }
  o.detail << "N(m,s) grid worst outlier fraction=" << worst << " (<= 0.05); ";
  o.require(worst <= 0.05, "Gaussian tensor above 5% outliers");

  // Weight-like low-kurtosis synthetics.
  double worst_w = 0.0;
  std::mt19937_64 rng(0x5eed0006);
  {
    std::vector<double> v;
    for (double x : t::normal_samples(7, 200'000, 0.0, 0.02)) {
      if (std::fabs(x) <= 0.05) v.push_back(x);  // truncated at 2.5 sigma
    }
    worst_w = std::max(worst_w, outlier_fraction_of(v));
  }
  {
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    std::vector<double> v(200'000);
    for (auto& x : v) x = u(rng);
    worst_w = std::max(worst_w, outlier_fraction_of(v));
  }
  worst_w = std::max(worst_w, outlier_fraction_of(t::normal_samples(8, 200'000, 0.001, 0.03)));
  o.detail << "weight-like worst outlier fraction=" << worst_w << " (<= 0.02); ";
  o.require(worst_w <= 0.02, "weight-like tensor above 2% outliers");
  return o;
}

Outcome quantization_quality() {
  Outcome o;
  const auto v = t::normal_samples(0x5eed0007, 1'000'000);
  const Tensor tensor = Tensor::from_doubles({v.size()}, v);
  const auto d = std::make_shared<const TensorDictionary>(
      build_tensor_dictionary(compute_stats(v), pipeline_fit(), std::span<const double>(v)));
  const Tensor dec = decode_tensor(encode_tensor(tensor, d));
  double sq = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) sq += std::pow(dec.value(i) - v[i], 2);
  const double ours = std::sqrt(sq / static_cast<double>(v.size()));
  double r = 0.0;
  for (double x : v) r = std::max(r, std::fabs(x));
  const double u15 = t::uniform_rmse(v, r, 15);
  const double u16 = t::uniform_rmse(v, r, 16);
  o.detail << "rmse dictionary=" << ours << " uniform15=" << u15 << " uniform16=" << u16 << "; ";
  o.require(ours < u15 && ours < u16, "not below uniform 4-bit");
  return o;
}

Outcome simulator_timing() {
  Outcome o;
  std::mt19937_64 rng(0x5eed0008);
  const CurveConstants curve = t::random_curve(rng);
  TensorDictionary da;
  TensorDictionary dw;
  do {
    da = t::random_dictionary(rng, curve);
  } while (da.outliers(0).empty());
  dw = t::random_dictionary(rng, curve);
  TileConfig cfg;

  bool peak = true;
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 100'000)(rng);
    const auto a = t::random_codes(rng, da, n, 0.0);
    const auto w = t::random_codes(rng, dw, n, 0.0);
    const SimStats s = simulate_dot_stream(a, w, cfg);
    peak = peak && s.stream_cycles == (n + 7) / 8 && s.outlier_stall_cycles == 0;
  }
  o.require(peak, "outlier-free stream not at ceil(n/8)");

  bool collisions = true;
  for (int i = 0; i < 500; ++i) {
    const std::size_t cycles = std::uniform_int_distribution<std::size_t>(1, 500)(rng);
    const std::size_t n = cycles * 8;
    auto a = t::random_codes(rng, da, n, 0.0);
    const auto w = t::random_codes(rng, dw, n, 0.0);
    std::uint64_t expect = 0;
    for (std::size_t c = 0; c < cycles; ++c) {
      const int k = std::uniform_int_distribution<int>(0, 8)(rng);
      std::vector<std::size_t> lanes(8);
      std::iota(lanes.begin(), lanes.end(), 0);
      std::shuffle(lanes.begin(), lanes.end(), rng);
      for (int j = 0; j < k; ++j) a[c * 8 + lanes[j]] = Code::outlier(0, 0);
      expect += static_cast<std::uint64_t>(std::max(0, k - 1));
    }
    collisions = collisions && simulate_dot_stream(a, w, cfg).outlier_stall_cycles == expect;
  }
  o.require(collisions, "collision stalls differ from max(0, c-1)");

  bool functional = true;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 5000)(rng);
    const double rate = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto a = t::random_codes(rng, da, n, rate);
    const auto w = t::random_codes(rng, dw, n, rate);
    const QFormat out{16, std::uniform_int_distribution<int>(0, 15)(rng)};
    const DotResult engine = dot(a, w, da, dw, out);
    for (int g : {1, 4, 8}) {
      for (int bits : {2, 8, 32}) {
        for (int post : {0, 1, 5}) {
          TileConfig c;
          c.gpe_count = g;
          c.counter_bits = bits;
          c.postproc_cycles_per_entry = post;
          const StreamResult r = simulate_dot(a, w, da, dw, out, c);
          functional = functional && r.result.value == engine.value && r.result.exact() == engine.exact();
        }
      }
    }
  }
  o.require(functional, "timing configuration changed values");
  o.detail << "500 outlier-free streams, 500 collision streams, 200 streams x 27 tile configs; ";
  return o;
}

Outcome fixed_point_formulas() {
  Outcome o;
  std::size_t checks = 0;
  std::size_t bad = 0;
  for (int b = 2; b <= 32; ++b) {
    for (int k = -40; k <= 40; ++k) {
      // ceil(log2(2^k)) = k; ceil(log2(2^k + eps)) = k + 1 for 0 < eps <= 2^k.
      const double span = std::ldexp(1.0, k);
      const auto want = [b](int c) { return std::clamp(b - c, 0, b - 1); };
      for (double lo : {0.0, -span / 2, -3.0 * span}) {
        ++checks;
        bad += compute_frac(b, lo + span, lo) == want(k) ? 0 : 1;
      }
      for (int e : {52, 30, 10, 1, 0}) {
        const double eps = std::ldexp(1.0, k - e);
        if (span + eps == span) continue;
        ++checks;
        bad += compute_frac(b, span + eps, 0.0) == want(k + 1) ? 0 : 1;
      }
    }
  }
  o.require(bad == 0, "compute_frac disagrees with b - ceil(log2(max - min))");
  std::size_t idem_bad = 0;
  for (int frac = 0; frac < 8; ++frac) {
    const QFormat q{8, frac};
    for (std::int64_t raw = q.min_raw(); raw <= q.max_raw(); ++raw) {
      idem_bad += to_fixed(to_float(raw, q), q) == raw ? 0 : 1;
      const double x = to_float(raw, q);
      idem_bad += to_float(to_fixed(x, q), q) == x ? 0 : 1;
    }
  }
  o.require(idem_bad == 0, "8-bit conversion not idempotent");
  o.detail << checks << " compute_frac cases (" << bad << " bad), 2048 8-bit conversions (" << idem_bad
           << " bad); ";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"curve_fit_constants", curve_fit_constants},
      {"oracle_equivalence", oracle_equivalence},
      {"gemm_equivalence", gemm_equivalence},
      {"counter_conservation", counter_conservation},
      {"packed_format", packed_format},
      {"gaussian_fraction", gaussian_fraction},
      {"quantization_quality", quantization_quality},
      {"simulator_timing", simulator_timing},
      {"fixed_point_formulas", fixed_point_formulas},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  for (const auto& w : wanted) {
    if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == w; })) {
      std::cerr << "unknown criterion: " << w << '\n';
      return 2;
    }
  }
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), name) == wanted.end()) continue;
    Outcome r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r.require(false, std::string("exception: ") + e.what());
    }
    std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail.str() << std::endl;
    failures += r.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
