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

#include <filesystem>
#include <memory>
#include <string>

#include "mky/quantizer.hpp"

namespace mky {

/// Everything about a quantized tensor except its codes: shape, dictionary
/// and the precomputed aux sums. Stored as versioned JSON next to the codes.
struct Sidecar {
  Shape shape;
  std::shared_ptr<const TensorDictionary> dict;
  AuxSums aux;
  std::size_t outlier_count = 0;
};

Sidecar make_sidecar(const QuantizedTensor& q);

std::string sidecar_to_text(const Sidecar& sc);
Sidecar sidecar_from_text(const std::string& text);

void save_sidecar(const Sidecar& sc, const std::filesystem::path& path);
Sidecar load_sidecar(const std::filesystem::path& path);

}  // namespace mky
