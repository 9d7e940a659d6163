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


#include "mky/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "byte_io.hpp"
#include "mky/error.hpp"

namespace mky {
namespace {

constexpr char kMagic[5] = "MKYT";
constexpr std::uint16_t kVersion = 1;

float round_to_half(float v) { return static_cast<float>(Eigen::half(v)); }

}  // namespace

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::kF32: return "f32";
    case DType::kF16: return "f16";
    case DType::kFx16: return "fx16";
  }
  return "?";
}

std::size_t element_count(const Shape& shape) {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, DType dtype, int frac, std::variant<std::vector<float>, std::vector<std::int16_t>> data)
    : shape_(std::move(shape)), dtype_(dtype), frac_(frac), data_(std::move(data)) {
  if (shape_.empty()) throw Error(ErrorCode::kShapeMismatch, "tensor rank must be at least 1");
  if (std::any_of(shape_.begin(), shape_.end(), [](std::size_t e) { return e == 0; })) {
    throw Error(ErrorCode::kShapeMismatch, "tensor extents must be positive, got " + shape_string(shape_));
  }
  const std::size_t n = std::visit([](const auto& v) { return v.size(); }, data_);
  if (n != element_count(shape_)) {
    throw Error(ErrorCode::kShapeMismatch,
                "shape " + shape_string(shape_) + " needs " + std::to_string(element_count(shape_)) +
                    " elements, data has " + std::to_string(n));
  }
  if (dtype_ == DType::kFx16 && (frac_ < 0 || frac_ > 15)) {
    throw Error(ErrorCode::kInvalidArgument, "fx16 frac bits must be in [0, 15]");
  }
}

Tensor Tensor::f32(Shape shape, std::vector<float> data) {
  return Tensor(std::move(shape), DType::kF32, 0, std::move(data));
}

Tensor Tensor::f16(Shape shape, std::vector<float> data) {
  for (float& v : data) v = round_to_half(v);
  return Tensor(std::move(shape), DType::kF16, 0, std::move(data));
}

Tensor Tensor::fx16(Shape shape, std::vector<std::int16_t> raw, int frac) {
  return Tensor(std::move(shape), DType::kFx16, frac, std::move(raw));
}

Tensor Tensor::from_doubles(Shape shape, std::span<const double> values) {
  std::vector<float> data(values.begin(), values.end());
  return f32(std::move(shape), std::move(data));
}

double Tensor::value(std::size_t i) const {
  if (dtype_ == DType::kFx16) return std::ldexp(static_cast<double>(std::get<1>(data_)[i]), -frac_);
  return static_cast<double>(std::get<0>(data_)[i]);
}

std::vector<double> Tensor::values() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(i);
  return out;
}

std::span<const float> Tensor::floats() const {
  if (dtype_ == DType::kFx16) throw Error(ErrorCode::kBadDType, "fx16 tensor has no float payload");
  return std::get<0>(data_);
}

std::span<const std::int16_t> Tensor::raw() const {
  if (dtype_ != DType::kFx16) throw Error(ErrorCode::kBadDType, "floating tensor has no fx16 payload");
  return std::get<1>(data_);
}

TensorStats compute_stats(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "statistics of an empty tensor");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  // Neumaier-compensated sums over a canonical order.
  auto kahan = [&](auto&& term) {
    double sum = 0.0;
    double comp = 0.0;
    for (double v : sorted) {
      const double x = term(v);
      const double t = sum + x;
      comp += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
      sum = t;
    }
    return sum + comp;
  };

  TensorStats st;
  st.count = sorted.size();
  st.min = sorted.front();
  st.max = sorted.back();
  const double n = static_cast<double>(st.count);
  st.mean = kahan([](double v) { return v; }) / n;
  st.mean = std::clamp(st.mean, st.min, st.max);
  const double m = st.mean;
  st.std = std::sqrt(kahan([m](double v) { return (v - m) * (v - m); }) / n);
  return st;
}

TensorStats compute_stats(const Tensor& t) {
  const auto v = t.values();
  return compute_stats(std::span<const double>(v));
}

std::vector<std::uint8_t> serialize_tensor(const Tensor& t) {
  if (t.empty()) throw Error(ErrorCode::kEmptyInput, "cannot serialize an empty tensor");
  if (t.shape().size() > 255) throw Error(ErrorCode::kInvalidArgument, "tensor rank exceeds 255");
  detail::ByteWriter w;
  w.put_magic(kMagic);
  w.put_u16(kVersion);
  w.put_u8(static_cast<std::uint8_t>(t.dtype()));
  w.put_u8(static_cast<std::uint8_t>(t.shape().size()));
  for (std::size_t e : t.shape()) {
    if (e > std::numeric_limits<std::uint32_t>::max()) throw Error(ErrorCode::kInvalidArgument, "extent exceeds u32");
    w.put_u32(static_cast<std::uint32_t>(e));
  }
  switch (t.dtype()) {
    case DType::kF32:
      for (float v : t.floats()) w.put_u32(std::bit_cast<std::uint32_t>(v));
      break;
    case DType::kF16:
      for (float v : t.floats()) w.put_u16(std::bit_cast<std::uint16_t>(Eigen::half(v)));
      break;
    case DType::kFx16:
      w.put_u8(static_cast<std::uint8_t>(t.frac()));
      for (std::int16_t v : t.raw()) w.put_u16(static_cast<std::uint16_t>(v));
      break;
  }
  return std::move(w.bytes());
}

Tensor parse_tensor(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (!r.magic_is(kMagic)) throw Error(ErrorCode::kBadMagic, "not an MKYT tensor file");
  r.skip(4);
  const std::uint16_t version = r.u16();
  if (version != kVersion) throw Error(ErrorCode::kUnsupportedVersion, "tensor file version " + std::to_string(version));
  const std::uint8_t code = r.u8();
  if (code > 2) throw Error(ErrorCode::kBadDType, "dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const std::uint8_t rank = r.u8();
  if (rank == 0) throw Error(ErrorCode::kShapeMismatch, "rank 0 tensor");
  Shape shape(rank);
  for (auto& e : shape) {
    e = r.u32();
    if (e == 0) throw Error(ErrorCode::kShapeMismatch, "zero extent in header");
  }
  const std::size_t n = element_count(shape);
  int frac = 0;
  if (dtype == DType::kFx16) frac = r.u8();

  const std::size_t width = dtype == DType::kF32 ? 4 : 2;
  if (r.remaining() < n * width) {
    throw Error(ErrorCode::kTruncated, "payload holds " + std::to_string(r.remaining()) + " bytes, shape " +
                                           shape_string(shape) + " needs " + std::to_string(n * width));
  }
  if (r.remaining() > n * width) {
    throw Error(ErrorCode::kShapeMismatch, std::to_string(r.remaining() - n * width) + " trailing bytes after payload");
  }

  switch (dtype) {
    case DType::kF32: {
      std::vector<float> data(n);
      for (auto& v : data) v = std::bit_cast<float>(r.u32());
      return Tensor::f32(std::move(shape), std::move(data));
    }
    case DType::kF16: {
      std::vector<float> data(n);
      for (auto& v : data) v = static_cast<float>(std::bit_cast<Eigen::half>(r.u16()));
      return Tensor::f16(std::move(shape), std::move(data));
    }
    case DType::kFx16: {
      std::vector<std::int16_t> data(n);
      for (auto& v : data) v = static_cast<std::int16_t>(r.u16());
      return Tensor::fx16(std::move(shape), std::move(data), frac);
    }
  }
  throw Error(ErrorCode::kBadDType, "unreachable");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) { write_file(path, serialize_tensor(t)); }

Tensor load_tensor(const std::filesystem::path& path) { return parse_tensor(read_file(path)); }

}  // namespace mky
