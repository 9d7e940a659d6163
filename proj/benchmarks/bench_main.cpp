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


#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include "mky/accel_sim.hpp"
#include "mky/golden_dict.hpp"
#include "mky/index_engine.hpp"
#include "mky/packer.hpp"
#include "mky/quantizer.hpp"

namespace {

using namespace mky;

ExpFit bench_fit() {
  ExpFit f;
  f.a = 1.2040;
  f.b = -0.8446;
  return f;
}

Tensor normal_tensor(std::uint64_t seed, Shape shape, double s = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, s);
  std::vector<double> v(element_count(shape));
  for (auto& x : v) x = nd(rng);
  return Tensor::from_doubles(std::move(shape), v);
}

QuantizedTensor quantized(std::uint64_t seed, Shape shape, double s = 1.0) {
  const Tensor t = normal_tensor(seed, std::move(shape), s);
  auto d = std::make_shared<const TensorDictionary>(build_tensor_dictionary(compute_stats(t), bench_fit(), t));
  return encode_tensor(t, d);
}

void BM_GoldenDictionary(benchmark::State& state) {
  GoldenOptions o;
  o.samples = static_cast<std::size_t>(state.range(0));
  o.repeats = 1;
  for (auto _ : state) benchmark::DoNotOptimize(generate_golden_dictionary(o));
}
BENCHMARK(BM_GoldenDictionary)->Arg(5'000)->Arg(50'000)->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor t = normal_tensor(1, {n});
  const auto d = std::make_shared<const TensorDictionary>(build_tensor_dictionary(compute_stats(t), bench_fit(), t));
  for (auto _ : state) benchmark::DoNotOptimize(encode_tensor(t, d));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Encode)->Arg(1 << 16)->Arg(1 << 20);

void BM_Dot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = quantized(2, {n});
  const auto w = quantized(3, {n}, 0.02);
  for (auto _ : state) benchmark::DoNotOptimize(dot(a.codes, w.codes, *a.dict, *w.dict, {16, 8}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Dot)->Arg(768)->Arg(4096);

void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = quantized(4, {n, n});
  const auto w = quantized(5, {n, n}, 0.02);
  for (auto _ : state) benchmark::DoNotOptimize(gemm(a, w, QFormat{16, 8}));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0) * state.range(0));
}
BENCHMARK(BM_Gemm)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Pack(benchmark::State& state) {
  const auto q = quantized(6, {static_cast<std::size_t>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(serialize_packed(pack(q)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Pack)->Arg(1 << 20);

void BM_Unpack(benchmark::State& state) {
  const auto q = quantized(7, {static_cast<std::size_t>(state.range(0))});
  const PackedTensor p = pack(q);
  for (auto _ : state) benchmark::DoNotOptimize(unpack(p, q.dict));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Unpack)->Arg(1 << 20);

void BM_SimulateLayer(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = quantized(8, {n, n});
  const auto w = quantized(9, {n, n}, 0.02);
  const TileConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_layer(a, w, cfg, 4, QFormat{16, 8}));
}
BENCHMARK(BM_SimulateLayer)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
