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


#include "mky/sidecar.hpp"

#include <json.hpp>

#include "mky/error.hpp"

namespace mky {

Sidecar make_sidecar(const QuantizedTensor& q) {
  return Sidecar{q.shape, q.dict, q.aux, q.outlier_count()};
}

std::string sidecar_to_text(const Sidecar& sc) {
  if (!sc.dict) throw Error(ErrorCode::kInvalidArgument, "sidecar without dictionary");
  const TensorDictionary& d = *sc.dict;
  nlohmann::ordered_json j;
  j["format"] = "mky-dict";
  j["version"] = 1;
  j["shape"] = sc.shape;
  j["s"] = d.s();
  j["m"] = d.m();
  j["bits"] = d.fmt().bits;
  j["frac"] = d.fmt().frac;
  j["alpha"] = d.curve().alpha();
  j["beta"] = d.curve().beta();
  j["degenerate"] = d.is_degenerate();
  j["s_raw"] = d.s_raw();
  j["m_raw"] = d.m_raw();
  std::vector<int> mags;
  for (int k = 0; k < kGaussianLevels; ++k) mags.push_back(d.g_magnitude(k));
  j["g_magnitudes"] = mags;
  auto ot = nlohmann::ordered_json::array();
  for (int sign = 0; sign < 2; ++sign) {
    for (const OutlierBin& bin : d.outliers(sign)) {
      ot.push_back({{"sign", sign}, {"int", bin.exponent}, {"centroid", bin.centroid}});
    }
  }
  j["outliers"] = ot;
  j["aux"] = {{"sum_pow", to_decimal(sc.aux.sum_pow)}, {"sum_sign", sc.aux.sum_sign}};
  j["outlier_count"] = sc.outlier_count;
  return j.dump(2) + "\n";
}

Sidecar sidecar_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformed, std::string("sidecar is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "mky-dict") throw Error(ErrorCode::kBadMagic, "not a dictionary sidecar");
  if (j.value("version", 0) != 1) throw Error(ErrorCode::kUnsupportedVersion, "sidecar version");

  try {
    Sidecar sc;
    sc.shape = j.at("shape").get<Shape>();
    const QFormat fmt{j.at("bits").get<int>(), j.at("frac").get<int>()};
    const CurveConstants curve(j.at("alpha").get<std::int64_t>(), j.at("beta").get<std::int64_t>());
    const double s = j.at("s").get<double>();
    const double m = j.at("m").get<double>();
    std::array<std::vector<int>, 2> exps;
    std::array<std::vector<int>, 2> centroids;
    for (const auto& bin : j.at("outliers")) {
      const int sign = bin.at("sign").get<int>();
      if (sign != 0 && sign != 1) throw Error(ErrorCode::kMalformed, "outlier sign must be 0 or 1");
      exps[sign].push_back(bin.at("int").get<int>());
      centroids[sign].push_back(bin.at("centroid").get<int>());
    }
    auto dict = std::make_shared<TensorDictionary>(
        j.at("degenerate").get<bool>() ? TensorDictionary::assemble(0.0, m, fmt, curve, {})
                                       : TensorDictionary::assemble(s, m, fmt, curve, exps));

    // The stored fixed-point tables must match what the parameters rebuild to.
    if (dict->s_raw() != j.at("s_raw").get<std::int64_t>() || dict->m_raw() != j.at("m_raw").get<std::int64_t>()) {
      throw Error(ErrorCode::kMalformed, "sidecar s/m raw values disagree with s/m");
    }
    const auto mags = j.at("g_magnitudes").get<std::vector<int>>();
    if (mags.size() != kGaussianLevels) throw Error(ErrorCode::kMalformed, "expected 8 Gaussian magnitudes");
    for (int k = 0; k < kGaussianLevels; ++k) {
      if (mags[k] != dict->g_magnitude(k)) throw Error(ErrorCode::kMalformed, "Gaussian magnitude table mismatch");
    }
    for (int sign = 0; sign < 2; ++sign) {
      const auto bins = dict->outliers(sign);
      for (std::size_t i = 0; i < bins.size(); ++i) {
        // Bins are re-sorted on assembly; find the stored entry for this exponent.
        for (std::size_t t = 0; t < exps[sign].size(); ++t) {
          if (exps[sign][t] == bins[i].exponent && centroids[sign][t] != bins[i].centroid) {
            throw Error(ErrorCode::kMalformed, "outlier centroid table mismatch");
          }
        }
      }
    }
    sc.dict = std::move(dict);
    sc.aux.sum_pow = parse_int128(j.at("aux").at("sum_pow").get<std::string>());
    sc.aux.sum_sign = j.at("aux").at("sum_sign").get<std::int64_t>();
    sc.outlier_count = j.at("outlier_count").get<std::size_t>();
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformed, std::string("sidecar: ") + e.what());
  }
}

void save_sidecar(const Sidecar& sc, const std::filesystem::path& path) {
  const std::string text = sidecar_to_text(sc);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Sidecar load_sidecar(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return sidecar_from_text(std::string(bytes.begin(), bytes.end()));
}

}  // namespace mky
