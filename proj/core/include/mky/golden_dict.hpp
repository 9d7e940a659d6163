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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mky {

/// Positive half of the symmetric model-independent dictionary. The full
/// dictionary is {-magnitudes reversed} followed by {+magnitudes}.
struct GoldenDictionary {
  std::vector<double> magnitudes;  // strictly ascending, >= 0

  // generation metadata
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t clusters = 0;
  std::size_t repeats = 0;

  std::vector<double> centroids() const;
};

/// Curve a^k + b fitted to the golden magnitudes.
struct ExpFit {
  double a = 1.0;
  double b = 0.0;
  int max_int = 7;
  double residual = 0.0;  // weighted sum of squared errors at the optimum
};

struct GoldenOptions {
  std::size_t samples = 50'000;
  std::size_t clusters = 16;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  /// Above this many samples, Ward runs on an equal-count downsample and a
  /// single Lloyd step on the full sample refines the result.
  std::size_t downsample = 4096;
};

/// Ward-linkage agglomerative clustering of 1-D values into k clusters.
/// Returns the k cluster means in ascending order.
std::vector<double> agglomerative_cluster(std::span<const double> values, std::size_t k);

/// Same, with per-point multiplicities (weights > 0).
std::vector<double> agglomerative_cluster(std::span<const double> values, std::span<const double> weights,
                                          std::size_t k);

/// Clusters one Gaussian draw (downsampled and refined when large).
std::vector<double> cluster_gaussian_draw(std::span<const double> samples, std::size_t clusters,
                                          std::size_t downsample);

GoldenDictionary generate_golden_dictionary(const GoldenOptions& options);

ExpFit fit_exponential(const GoldenDictionary& gd);
ExpFit fit_exponential(std::span<const double> magnitudes);

/// Weighted objective used by the fit; weight(k) = 2^(n-1-k).
double fit_objective(std::span<const double> magnitudes, double a, double b);

/// a^k + b for k in [0, 14].
double eval_magnitude(const ExpFit& fit, int k);

void save_golden(const GoldenDictionary& gd, const ExpFit& fit, const std::filesystem::path& path);
struct GoldenFile {
  GoldenDictionary dictionary;
  ExpFit fit;
};
GoldenFile load_golden(const std::filesystem::path& path);
std::string golden_to_text(const GoldenDictionary& gd, const ExpFit& fit);
GoldenFile golden_from_text(const std::string& text);

}  // namespace mky
