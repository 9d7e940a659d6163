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


#include "mky/golden_dict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <json.hpp>

#include "mky/error.hpp"
#include "mky/tensor.hpp"

namespace mky {
namespace {

struct Merge {
  double height;
  std::size_t a;
  std::size_t b;
};

double ward_cost(double ca, double wa, double cb, double wb) {
  const double d = ca - cb;
  return wa * wb / (wa + wb) * d * d;
}

// Nearest-neighbour chain over Ward linkage. Ward is reducible, so the merges
// found here, replayed in height order, are the greedy merge sequence.
std::vector<Merge> ward_dendrogram(std::span<const double> values, std::span<const double> weights) {
  const std::size_t n = values.size();
  std::vector<double> centre(values.begin(), values.end());
  std::vector<double> weight(weights.begin(), weights.end());
  std::vector<char> active(n, 1);
  std::vector<std::size_t> chain;
  std::vector<Merge> merges;
  merges.reserve(n > 0 ? n - 1 : 0);
  std::size_t remaining = n;
  std::size_t first_active = 0;

  while (remaining > 1) {
    if (chain.empty()) {
      while (!active[first_active]) ++first_active;
      chain.push_back(first_active);
    }
    const std::size_t x = chain.back();
    const bool has_prev = chain.size() >= 2;
    const std::size_t prev = has_prev ? chain[chain.size() - 2] : 0;

    std::size_t best = has_prev ? prev : n;
    double best_cost = has_prev ? ward_cost(centre[x], weight[x], centre[prev], weight[prev])
                                : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == x) continue;
      const double c = ward_cost(centre[x], weight[x], centre[j], weight[j]);
      if (c < best_cost) {
        best_cost = c;
        best = j;
      }
    }

    if (has_prev && best == prev) {
      chain.pop_back();
      chain.pop_back();
      const std::size_t keep = std::min(x, prev);
      const std::size_t drop = std::max(x, prev);
      merges.push_back({best_cost, keep, drop});
      const double w = weight[keep] + weight[drop];
      centre[keep] = (weight[keep] * centre[keep] + weight[drop] * centre[drop]) / w;
      weight[keep] = w;
      active[drop] = 0;
      --remaining;
    } else {
      chain.push_back(best);
    }
  }
  return merges;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<double> GoldenDictionary::centroids() const {
  std::vector<double> out;
  out.reserve(2 * magnitudes.size());
  for (auto it = magnitudes.rbegin(); it != magnitudes.rend(); ++it) out.push_back(-*it);
  out.insert(out.end(), magnitudes.begin(), magnitudes.end());
  return out;
}

std::vector<double> agglomerative_cluster(std::span<const double> values, std::span<const double> weights,
                                          std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "cluster count must be at least 1");
  if (k > values.size()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot form " + std::to_string(k) + " clusters from " +
                                                 std::to_string(values.size()) + " values");
  }
  if (weights.size() != values.size()) throw Error(ErrorCode::kInvalidArgument, "weights/values length mismatch");

  const std::size_t n = values.size();
  std::vector<Merge> merges = ward_dendrogram(values, weights);
  std::stable_sort(merges.begin(), merges.end(),
                   [](const Merge& l, const Merge& r) { return l.height < r.height; });

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (std::size_t m = 0; m < n - k; ++m) {
    const std::size_t ra = find_root(parent, merges[m].a);
    const std::size_t rb = find_root(parent, merges[m].b);
    parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  std::vector<double> sum(n, 0.0);
  std::vector<double> mass(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find_root(parent, i);
    sum[r] += weights[i] * values[i];
    mass[r] += weights[i];
  }
  std::vector<double> means;
  means.reserve(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (mass[i] > 0.0) means.push_back(sum[i] / mass[i]);
  }
  std::sort(means.begin(), means.end());
  return means;
}

std::vector<double> agglomerative_cluster(std::span<const double> values, std::size_t k) {
  const std::vector<double> ones(values.size(), 1.0);
  return agglomerative_cluster(values, ones, k);
}

std::vector<double> cluster_gaussian_draw(std::span<const double> samples, std::size_t clusters,
                                          std::size_t downsample) {
  if (samples.size() <= downsample || downsample < clusters) return agglomerative_cluster(samples, clusters);

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  std::vector<double> points(downsample);
  std::vector<double> weights(downsample);
  for (std::size_t b = 0; b < downsample; ++b) {
    const std::size_t lo = b * n / downsample;
    const std::size_t hi = (b + 1) * n / downsample;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += sorted[i];
    points[b] = s / static_cast<double>(hi - lo);
    weights[b] = static_cast<double>(hi - lo);
  }
  std::vector<double> centres = agglomerative_cluster(points, weights, clusters);

  // One Lloyd step on the full sample; centres are sorted so the nearest
  // centre changes at midpoints.
  std::vector<double> sum(clusters, 0.0);
  std::vector<std::size_t> count(clusters, 0);
  std::size_t c = 0;
  for (double v : sorted) {
    while (c + 1 < clusters && v > 0.5 * (centres[c] + centres[c + 1])) ++c;
    sum[c] += v;
    ++count[c];
  }
  for (std::size_t i = 0; i < clusters; ++i) {
    if (count[i] > 0) centres[i] = sum[i] / static_cast<double>(count[i]);
  }
  std::sort(centres.begin(), centres.end());
  return centres;
}

GoldenDictionary generate_golden_dictionary(const GoldenOptions& options) {
  if (options.clusters == 0 || options.clusters % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "cluster count must be a positive even number");
  }
  if (options.samples < options.clusters) {
    throw Error(ErrorCode::kInvalidArgument, "need at least as many samples as clusters");
  }
  if (options.repeats == 0) throw Error(ErrorCode::kInvalidArgument, "repeats must be at least 1");

  std::vector<double> average(options.clusters, 0.0);
  std::vector<double> draw(options.samples);
  for (std::size_t r = 0; r < options.repeats; ++r) {
    // Each repeat owns its stream so results do not depend on run order.
    boost::random::mt19937_64 engine(splitmix64(options.seed * 0x100000001b3ULL + r));
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : draw) v = normal(engine);
    const std::vector<double> centres = cluster_gaussian_draw(draw, options.clusters, options.downsample);
    for (std::size_t i = 0; i < options.clusters; ++i) average[i] += centres[i];
  }
  for (double& v : average) v /= static_cast<double>(options.repeats);

  GoldenDictionary gd;
  gd.seed = options.seed;
  gd.samples = options.samples;
  gd.clusters = options.clusters;
  gd.repeats = options.repeats;
  const std::size_t half = options.clusters / 2;
  gd.magnitudes.resize(half);
  for (std::size_t i = 0; i < half; ++i) {
    gd.magnitudes[i] = 0.5 * (average[half + i] - average[half - 1 - i]);
  }
  for (std::size_t i = 1; i < half; ++i) {
    if (!(gd.magnitudes[i] > gd.magnitudes[i - 1])) {
      throw Error(ErrorCode::kNonConvergence, "symmetrized magnitudes are not strictly ascending");
    }
  }
  return gd;
}

double fit_objective(std::span<const double> magnitudes, double a, double b) {
  const std::size_t n = magnitudes.size();
  double total = 0.0;
  double power = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double weight = std::ldexp(1.0, static_cast<int>(n - 1 - k));
    const double r = power + b - magnitudes[k];
    total += weight * r * r;
    power *= a;
  }
  return total;
}

namespace {

// Weighted-mean residual: the optimal b for a fixed a.
double best_offset(std::span<const double> magnitudes, double a) {
  const std::size_t n = magnitudes.size();
  double num = 0.0;
  double den = 0.0;
  double power = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double weight = std::ldexp(1.0, static_cast<int>(n - 1 - k));
    num += weight * (magnitudes[k] - power);
    den += weight;
    power *= a;
  }
  return num / den;
}

}  // namespace

ExpFit fit_exponential(std::span<const double> magnitudes) {
  if (magnitudes.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two magnitudes to fit");

  auto f = [&](double a) { return fit_objective(magnitudes, a, best_offset(magnitudes, a)); };

  constexpr double kLow = 1.0;
  constexpr double kHigh = 2.0;
  constexpr int kGrid = 1000;
  int best_i = 1;
  double best_f = f(kLow + (kHigh - kLow) / kGrid);
  for (int i = 2; i <= kGrid; ++i) {
    const double v = f(kLow + (kHigh - kLow) * i / kGrid);
    if (v < best_f) {
      best_f = v;
      best_i = i;
    }
  }
  double lo = kLow + (kHigh - kLow) * (best_i - 1) / kGrid;
  double hi = kLow + (kHigh - kLow) * std::min(best_i + 1, kGrid) / kGrid;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  int iter = 0;
  for (; iter < 200 && hi - lo > 1e-14; ++iter) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }

  ExpFit fit;
  fit.a = 0.5 * (lo + hi);
  fit.b = best_offset(magnitudes, fit.a);
  fit.max_int = static_cast<int>(magnitudes.size()) - 1;
  fit.residual = fit_objective(magnitudes, fit.a, fit.b);
  if (best_i == kGrid && kHigh - fit.a < 1e-9) {
    throw Error(ErrorCode::kNonConvergence,
                "optimum lies at the edge of a in (1, 2]; residual " + std::to_string(fit.residual));
  }
  if (!std::isfinite(fit.residual)) {
    throw Error(ErrorCode::kNonConvergence, "fit residual is not finite");
  }
  return fit;
}

ExpFit fit_exponential(const GoldenDictionary& gd) { return fit_exponential(gd.magnitudes); }

double eval_magnitude(const ExpFit& fit, int k) {
  if (k < 0 || k > 14) throw Error(ErrorCode::kOutOfRange, "curve index must be in [0, 14], got " + std::to_string(k));
  return std::pow(fit.a, k) + fit.b;
}

std::string golden_to_text(const GoldenDictionary& gd, const ExpFit& fit) {
  nlohmann::ordered_json j;
  j["format"] = "mky-golden";
  j["version"] = 1;
  j["magnitudes"] = gd.magnitudes;
  j["a"] = fit.a;
  j["b"] = fit.b;
  j["max_int"] = fit.max_int;
  j["residual"] = fit.residual;
  j["seed"] = gd.seed;
  j["samples"] = gd.samples;
  j["clusters"] = gd.clusters;
  j["repeats"] = gd.repeats;
  return j.dump(2) + "\n";
}

GoldenFile golden_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformed, std::string("golden file is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "mky-golden") throw Error(ErrorCode::kBadMagic, "not a golden dictionary file");
  if (j.value("version", 0) != 1) throw Error(ErrorCode::kUnsupportedVersion, "golden file version");
  try {
    GoldenFile g;
    g.dictionary.magnitudes = j.at("magnitudes").get<std::vector<double>>();
    g.dictionary.seed = j.at("seed").get<std::uint64_t>();
    g.dictionary.samples = j.at("samples").get<std::size_t>();
    g.dictionary.clusters = j.at("clusters").get<std::size_t>();
    g.dictionary.repeats = j.at("repeats").get<std::size_t>();
    g.fit.a = j.at("a").get<double>();
    g.fit.b = j.at("b").get<double>();
    g.fit.max_int = j.at("max_int").get<int>();
    g.fit.residual = j.at("residual").get<double>();
    if (!(g.fit.a > 1.0)) throw Error(ErrorCode::kMalformed, "curve base a must exceed 1");
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformed, std::string("golden file: ") + e.what());
  }
}

void save_golden(const GoldenDictionary& gd, const ExpFit& fit, const std::filesystem::path& path) {
  const std::string text = golden_to_text(gd, fit);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

GoldenFile load_golden(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return golden_from_text(std::string(bytes.begin(), bytes.end()));
}

}  // namespace mky
