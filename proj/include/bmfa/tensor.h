// Copyright (c) 2026 The BMFA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BMFA_TENSOR_H_
#define BMFA_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bmfa/error.h"

namespace bmfa {

enum class Precision : uint8_t { kFloat32 = 0, kFloat64 = 1 };

template <typename T>
constexpr Precision PrecisionOf();
template <>
constexpr Precision PrecisionOf<float>() { return Precision::kFloat32; }
template <>
constexpr Precision PrecisionOf<double>() { return Precision::kFloat64; }

// Layout is (batch, channels, time, frequency). Table-style T x F x C shapes
// map onto (N, C, T, F) with the channel axis moved forward.
struct Shape {
  int n = 0;
  int c = 0;
  int t = 0;
  int f = 0;

  size_t numel() const {
    return static_cast<size_t>(n) * c * t * f;
  }
  bool operator==(const Shape&) const = default;
  std::string ToString() const;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int t() const { return shape_.t; }
  int f() const { return shape_.f; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const std::vector<T>& vector() const { return data_; }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  size_t Offset(int n, int c, int t, int f) const {
    return ((static_cast<size_t>(n) * shape_.c + c) * shape_.t + t) *
               shape_.f + f;
  }
  T& at(int n, int c, int t, int f) { return data_[Offset(n, c, t, f)]; }
  const T& at(int n, int c, int t, int f) const {
    return data_[Offset(n, c, t, f)];
  }

  void Fill(T v);
  // Same buffer reinterpreted; numel must match.
  Tensor Reshaped(Shape shape) const;

  template <typename U>
  Tensor<U> Cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

// Throws InvalidInput if any dimension is < 1.
void ValidateShape(const Shape& s);

// BTF1 tensor file: "BTENSOR1", u32 rank=4, u32 N,C,T,F, u8 precision code,
// then raw little-endian values in C order.
template <typename T>
void WriteTensor(std::ostream& os, const Tensor<T>& t);
// Reads a BTF1 tensor stored at either precision, converting to T.
template <typename T>
Tensor<T> ReadTensor(std::istream& is);

template <typename T>
void SaveTensor(const std::string& path, const Tensor<T>& t);
template <typename T>
Tensor<T> LoadTensor(const std::string& path);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace bmfa

#endif  // BMFA_TENSOR_H_
