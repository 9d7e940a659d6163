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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mky {

enum class DType : std::uint8_t { kF32 = 0, kF16 = 1, kFx16 = 2 };

std::string_view dtype_name(DType dtype);

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor. Floating dtypes keep their samples as float (f16
/// payloads are widened on load and narrowed again on save); fx16 keeps the
/// raw int16 values together with the number of fractional bits.
class Tensor {
 public:
  Tensor() = default;

  static Tensor f32(Shape shape, std::vector<float> data);
  /// Values are rounded to the nearest binary16 so that saving is lossless.
  static Tensor f16(Shape shape, std::vector<float> data);
  static Tensor fx16(Shape shape, std::vector<std::int16_t> raw, int frac);
  static Tensor from_doubles(Shape shape, std::span<const double> values);

  const Shape& shape() const { return shape_; }
  DType dtype() const { return dtype_; }
  int frac() const { return frac_; }
  std::size_t size() const { return element_count(shape_); }
  bool empty() const { return size() == 0; }

  /// Element value as a real number regardless of dtype.
  double value(std::size_t i) const;
  std::vector<double> values() const;

  std::span<const float> floats() const;
  std::span<const std::int16_t> raw() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Tensor(Shape shape, DType dtype, int frac, std::variant<std::vector<float>, std::vector<std::int16_t>> data);

  Shape shape_;
  DType dtype_ = DType::kF32;
  int frac_ = 0;
  std::variant<std::vector<float>, std::vector<std::int16_t>> data_;
};

struct TensorStats {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// Summation runs over the sorted values, so the result does not depend on
/// element order.
TensorStats compute_stats(std::span<const double> values);
TensorStats compute_stats(const Tensor& t);

std::vector<std::uint8_t> serialize_tensor(const Tensor& t);
Tensor parse_tensor(std::span<const std::uint8_t> bytes);

void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mky
