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


#include "mky/accel_sim.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "mky/error.hpp"
#include "mky/packer.hpp"

namespace mky {
namespace {

// One serial reduction step per counter entry: 15 + 8 + 8 + 1.
constexpr int kEntriesPerGpe = (2 * kGaussianLevels - 1) + kGaussianLevels + kGaussianLevels + 1;
// Output quantization of one element.
constexpr int kQuantizeCycles = 1;

std::int64_t drain_period(const TileConfig& cfg) {
  return (std::int64_t{1} << (cfg.counter_bits - 1)) - 1;
}

// Shared cycle loop. `on_pair(gpe, index)` sees every pair in hardware order;
// `on_drain()` fires when all GPEs drain together.
template <typename PairFn, typename DrainFn>
SimStats run_stream(std::span<const Code> a_row, std::span<const Code> w_col, const TileConfig& cfg, PairFn on_pair,
                    DrainFn on_drain) {
  cfg.validate();
  if (a_row.size() != w_col.size()) {
    throw Error(ErrorCode::kShapeMismatch, "dot operands differ in length: " + std::to_string(a_row.size()) +
                                               " vs " + std::to_string(w_col.size()));
  }
  const std::size_t n = a_row.size();
  const std::size_t g = static_cast<std::size_t>(cfg.gpe_count);
  const std::int64_t period = drain_period(cfg);
  SimStats s;
  std::int64_t since_drain = 0;  // pairs per GPE since the last drain
  for (std::size_t base = 0; base < n; base += g) {
    if (since_drain == period) {
      on_drain();
      ++s.drain_events;
      s.postproc_cycles += static_cast<std::uint64_t>(cfg.drain_cycles);
      since_drain = 0;
    }
    const std::size_t end = std::min(base + g, n);
    std::uint8_t flags = 0;
    for (std::size_t i = base; i < end; ++i) {
      const bool ot = a_row[i].is_outlier() || w_col[i].is_outlier();
      if (ot) {
        flags |= static_cast<std::uint8_t>(1u << (i - base));
        ++s.outlier_pairs;
      } else {
        ++s.gaussian_pairs;
      }
    }
    // Gaussian pairs go straight into the counters; outliers in grant order.
    for (std::size_t i = base; i < end; ++i) {
      if (!((flags >> (i - base)) & 1u)) on_pair(i - base, i);
    }
    std::uint8_t pending = flags;
    while (pending != 0) {
      const Schedule sch = schedule_outliers(pending);
      on_pair(static_cast<std::size_t>(sch.selected), base + static_cast<std::size_t>(sch.selected));
      pending = sch.holds;
    }
    const int c = std::popcount(flags);
    const std::uint64_t cycles = static_cast<std::uint64_t>(std::max(1, c * cfg.opp_mac_cycles));
    ++s.stream_cycles;
    s.outlier_stall_cycles += cycles - 1;
    ++since_drain;
  }
  s.postproc_cycles +=
      static_cast<std::uint64_t>(cfg.gpe_count) * kEntriesPerGpe * cfg.postproc_cycles_per_entry + kQuantizeCycles;
  s.finish(cfg.gpe_count);
  return s;
}

}  // namespace

void TileConfig::validate() const {
  if (gpe_count < 1 || gpe_count > 8) {
    throw Error(ErrorCode::kInvalidArgument, "gpe_count must be in [1, 8], got " + std::to_string(gpe_count));
  }
  if (counter_bits < 2 || counter_bits > 32) {
    throw Error(ErrorCode::kInvalidArgument, "counter_bits must be in [2, 32], got " + std::to_string(counter_bits));
  }
  if (postproc_cycles_per_entry < 0 || opp_mac_cycles < 1 || drain_cycles < 0) {
    throw Error(ErrorCode::kInvalidArgument, "cycle costs must be non-negative (opp_mac_cycles >= 1)");
  }
}

void SimStats::add(const SimStats& o) {
  stream_cycles += o.stream_cycles;
  outlier_stall_cycles += o.outlier_stall_cycles;
  postproc_cycles += o.postproc_cycles;
  drain_events += o.drain_events;
  gaussian_pairs += o.gaussian_pairs;
  outlier_pairs += o.outlier_pairs;
  bytes_moved += o.bytes_moved;
}

void SimStats::finish(int gpe_count) {
  total_cycles = stream_cycles + outlier_stall_cycles + postproc_cycles;
  gpe_utilization = total_cycles == 0
                        ? 0.0
                        : static_cast<double>(gaussian_pairs) /
                              (static_cast<double>(gpe_count) * static_cast<double>(total_cycles));
}

Schedule schedule_outliers(std::uint8_t flags) {
  Schedule s;
  if (flags == 0) return s;
  s.selected = std::countr_zero(flags);
  s.holds = static_cast<std::uint8_t>(flags & (flags - 1));
  return s;
}

int drain_schedule_length(std::uint8_t flags) {
  int cycles = 0;
  while (flags != 0) {
    flags = schedule_outliers(flags).holds;
    ++cycles;
  }
  return cycles;
}

StreamResult simulate_dot(std::span<const Code> a_row, std::span<const Code> w_col, const TensorDictionary& da,
                          const TensorDictionary& dw, const QFormat& out, const TileConfig& cfg) {
  const EngineConstants consts = EngineConstants::make(da, dw);
  std::vector<CounterFile> gpes(static_cast<std::size_t>(std::max(cfg.gpe_count, 1)));
  for (auto& cf : gpes) cf.counter_bits = cfg.counter_bits;
  CounterFile shadow;
  shadow.counter_bits = 62;  // wide shadow file
  Int256 opp_acc = 0;
  std::vector<std::size_t> ot_a;
  std::vector<std::size_t> ot_w;

  StreamResult r;
  r.stats = run_stream(
      a_row, w_col, cfg,
      [&](std::size_t gpe, std::size_t i) {
        if (a_row[i].is_outlier()) ot_a.push_back(i);
        if (w_col[i].is_outlier()) ot_w.push_back(i);
        accumulate_pair(gpes[gpe], opp_acc, a_row[i], w_col[i], da, dw);
      },
      [&] {
        for (auto& cf : gpes) {
          shadow.merge(cf);
          cf.clear();
        }
      });
  for (auto& cf : gpes) shadow.merge(cf);

  const AuxSums aux_a = restrict_aux(compute_aux(a_row, consts.curve), a_row, ot_w, consts.curve);
  const AuxSums aux_w = restrict_aux(compute_aux(w_col, consts.curve), w_col, ot_a, consts.curve);
  r.result = finalize(shadow, opp_acc, consts, aux_a, aux_w, out);
  r.counters = shadow;
  return r;
}

SimStats simulate_dot_stream(std::span<const Code> a_row, std::span<const Code> w_col, const TileConfig& cfg) {
  return run_stream(a_row, w_col, cfg, [](std::size_t, std::size_t) {}, [] {});
}

LayerResult simulate_layer(const QuantizedTensor& a, const QuantizedTensor& w, const TileConfig& cfg, int tiles,
                           std::optional<QFormat> out, std::uint32_t group_size) {
  cfg.validate();
  if (tiles < 1) throw Error(ErrorCode::kInvalidArgument, "tile count must be positive");
  if (!a.dict || !w.dict) throw Error(ErrorCode::kInvalidArgument, "simulate_layer operands need dictionaries");
  const MatrixDims da = activation_dims(a.shape);
  const MatrixDims dw = weight_dims(w.shape);
  if (da.cols != dw.rows) {
    throw Error(ErrorCode::kShapeMismatch,
                "inner dimensions differ: " + shape_string(a.shape) + " x " + shape_string(w.shape));
  }
  const std::size_t m = da.rows;
  const std::size_t k = da.cols;
  const std::size_t n = dw.cols;
  const QFormat fmt = out ? *out : gemm(a, w).fmt;

  std::vector<Code> wt(k * n);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < n; ++j) wt[j * k + p] = w.codes[p * n + j];
  }

  LayerResult lr;
  lr.fmt = fmt;
  lr.per_tile.assign(static_cast<std::size_t>(tiles), SimStats{});
  std::vector<std::int16_t> raw(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const std::span<const Code> row(a.codes.data() + i * k, k);
    for (std::size_t j = 0; j < n; ++j) {
      const std::span<const Code> col(wt.data() + j * k, k);
      const StreamResult sr = simulate_dot(row, col, *a.dict, *w.dict, fmt, cfg);
      raw[i * n + j] = sr.result.value;
      lr.per_tile[(i * n + j) % static_cast<std::size_t>(tiles)].add(sr.stats);
    }
  }
  for (auto& t : lr.per_tile) t.finish(cfg.gpe_count);
  lr.stats = *std::max_element(lr.per_tile.begin(), lr.per_tile.end(),
                               [](const SimStats& l, const SimStats& r) { return l.total_cycles < r.total_cycles; });
  // Traffic is layer-wide: both packed operands in, 16-bit outputs out.
  lr.stats.bytes_moved = measure(pack(a, group_size)).stored_bytes + measure(pack(w, group_size)).stored_bytes +
                         2 * static_cast<std::uint64_t>(m * n);
  lr.output = Tensor::fx16({m, n}, std::move(raw), fmt.frac);
  return lr;
}

std::string csv_header() {
  return "total_cycles,stream_cycles,outlier_stall_cycles,postproc_cycles,drain_events,bytes_moved";
}

std::string csv_row(const SimStats& s) {
  std::ostringstream os;
  os << s.total_cycles << ',' << s.stream_cycles << ',' << s.outlier_stall_cycles << ',' << s.postproc_cycles << ','
     << s.drain_events << ',' << s.bytes_moved;
  return os.str();
}

std::string report_text(const SimStats& s) {
  std::ostringstream os;
  os << "total cycles:        " << s.total_cycles << '\n'
     << "stream cycles:       " << s.stream_cycles << '\n'
     << "outlier stalls:      " << s.outlier_stall_cycles << '\n'
     << "post-processing:     " << s.postproc_cycles << '\n'
     << "drain events:        " << s.drain_events << '\n'
     << "gaussian pairs:      " << s.gaussian_pairs << '\n'
     << "outlier pairs:       " << s.outlier_pairs << '\n'
     << "bytes moved:         " << s.bytes_moved << '\n'
     << "gpe utilization:     " << s.gpe_utilization << '\n';
  return os.str();
}

}  // namespace mky
