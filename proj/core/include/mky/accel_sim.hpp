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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mky/index_engine.hpp"

namespace mky {

struct TileConfig {
  int gpe_count = 8;
  int counter_bits = 8;
  int postproc_cycles_per_entry = 1;
  int opp_mac_cycles = 1;
  /// Cycles to drain every GPE's counters into the wide shadow file.
  int drain_cycles = 32;

  /// Throws kInvalidArgument unless every field is in range.
  void validate() const;
};

struct SimStats {
  std::uint64_t total_cycles = 0;
  std::uint64_t stream_cycles = 0;
  std::uint64_t outlier_stall_cycles = 0;
  std::uint64_t postproc_cycles = 0;  // includes drains and output quantization
  std::uint64_t drain_events = 0;
  std::uint64_t gaussian_pairs = 0;
  std::uint64_t outlier_pairs = 0;
  std::uint64_t bytes_moved = 0;
  double gpe_utilization = 0.0;  // Gaussian pairs / (gpe_count * total_cycles)

  void add(const SimStats& other);
  /// Recomputes total_cycles and utilization from the parts.
  void finish(int gpe_count);
};

struct Schedule {
  int selected = -1;       // lowest flagged GPE, -1 if none
  std::uint8_t holds = 0;  // every other flagged GPE
};

/// Leading-one selection over per-GPE outlier flags (bit i = GPE i).
Schedule schedule_outliers(std::uint8_t flags);

/// Cycles the OPP needs to serve every flagged GPE, one per grant.
int drain_schedule_length(std::uint8_t flags);

struct StreamResult {
  SimStats stats;
  DotResult result;
  CounterFile counters;  // merged shadow file
};

/// One tile computing one dot product. Pairs are dealt to the GPEs in
/// groups of gpe_count per cycle; outlier pairs of a cycle go through the
/// OPP one at a time while the other GPEs hold.
///
/// Each GPE drains its narrow counters into a wide shadow file once it has
/// consumed 2^(counter_bits-1)-1 pairs since the last drain, before any
/// counter can leave its range.
StreamResult simulate_dot(std::span<const Code> a_row, std::span<const Code> w_col, const TensorDictionary& da,
                          const TensorDictionary& dw, const QFormat& out, const TileConfig& cfg);

/// Timing only.
SimStats simulate_dot_stream(std::span<const Code> a_row, std::span<const Code> w_col, const TileConfig& cfg);

struct LayerResult {
  SimStats stats;                 // slowest tile
  std::vector<SimStats> per_tile;
  Tensor output;                  // fx16 [M, N]
  QFormat fmt;
};

/// Maps A[M,K] x W[K,N] onto `tiles` tiles, dot products dealt round-robin.
/// The output format is the one gemm would choose unless given.
LayerResult simulate_layer(const QuantizedTensor& a, const QuantizedTensor& w, const TileConfig& cfg, int tiles,
                           std::optional<QFormat> out = std::nullopt, std::uint32_t group_size = 64);

std::string csv_header();
std::string csv_row(const SimStats& s);
std::string report_text(const SimStats& s);

}  // namespace mky
