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

#include "bmfa/tensor.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace bmfa {
namespace {

constexpr char kMagic[8] = {'B', 'T', 'E', 'N', 'S', 'O', 'R', '1'};

static_assert(std::endian::native == std::endian::little,
              "tensor IO assumes a little-endian host");

void WriteU32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t ReadU32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw FormatError("truncated tensor header");
  return v;
}

template <typename Src, typename Dst>
std::vector<Dst> ReadValues(std::istream& is, size_t count) {
  std::vector<Src> raw(count);
  is.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(count * sizeof(Src)));
  if (!is) throw FormatError("truncated tensor payload");
  return std::vector<Dst>(raw.begin(), raw.end());
}

}  // namespace

std::string Shape::ToString() const {
  std::ostringstream ss;
  ss << "(" << n << "," << c << "," << t << "," << f << ")";
  return ss.str();
}

void ValidateShape(const Shape& s) {
  if (s.n < 1 || s.c < 1 || s.t < 1 || s.f < 1) {
    throw InvalidInput("tensor dims must be >= 1, got " + s.ToString());
  }
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(shape) {
  ValidateShape(shape);
  data_.assign(shape.numel(), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values)
    : shape_(shape), data_(std::move(values)) {
  ValidateShape(shape);
  if (data_.size() != shape.numel()) {
    throw InvalidInput("buffer length " + std::to_string(data_.size()) +
                       " does not match shape " + shape.ToString());
  }
}

template <typename T>
void Tensor<T>::Fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
Tensor<T> Tensor<T>::Reshaped(Shape shape) const {
  return Tensor<T>(shape, data_);
}

template <typename T>
void WriteTensor(std::ostream& os, const Tensor<T>& t) {
  os.write(kMagic, sizeof(kMagic));
  WriteU32(os, 4);
  WriteU32(os, static_cast<uint32_t>(t.n()));
  WriteU32(os, static_cast<uint32_t>(t.c()));
  WriteU32(os, static_cast<uint32_t>(t.t()));
  WriteU32(os, static_cast<uint32_t>(t.f()));
  const auto code = static_cast<uint8_t>(PrecisionOf<T>());
  os.write(reinterpret_cast<const char*>(&code), 1);
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(T)));
}

template <typename T>
Tensor<T> ReadTensor(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a BTF1 tensor (bad magic)");
  }
  const uint32_t rank = ReadU32(is);
  if (rank != 4) {
    throw FormatError("unsupported tensor rank " + std::to_string(rank));
  }
  std::array<uint32_t, 4> dims{};
  for (auto& d : dims) d = ReadU32(is);
  Shape shape{static_cast<int>(dims[0]), static_cast<int>(dims[1]),
              static_cast<int>(dims[2]), static_cast<int>(dims[3])};
  if (shape.n < 1 || shape.c < 1 || shape.t < 1 || shape.f < 1) {
    throw FormatError("tensor file has zero dimension " + shape.ToString());
  }
  uint8_t code = 0xff;
  is.read(reinterpret_cast<char*>(&code), 1);
  if (!is) throw FormatError("truncated tensor header");
  switch (code) {
    case 0:
      return Tensor<T>(shape, ReadValues<float, T>(is, shape.numel()));
    case 1:
      return Tensor<T>(shape, ReadValues<double, T>(is, shape.numel()));
    default:
      throw FormatError("unknown tensor precision code " +
                        std::to_string(code));
  }
}

template <typename T>
void SaveTensor(const std::string& path, const Tensor<T>& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  WriteTensor(os, t);
  if (!os) throw FormatError("write failed: " + path);
}

template <typename T>
Tensor<T> LoadTensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open tensor file " + path);
  return ReadTensor<T>(is);
}

template class Tensor<float>;
template class Tensor<double>;
template void WriteTensor(std::ostream&, const Tensor<float>&);
template void WriteTensor(std::ostream&, const Tensor<double>&);
template Tensor<float> ReadTensor(std::istream&);
template Tensor<double> ReadTensor(std::istream&);
template void SaveTensor(const std::string&, const Tensor<float>&);
template void SaveTensor(const std::string&, const Tensor<double>&);
template Tensor<float> LoadTensor(const std::string&);
template Tensor<double> LoadTensor(const std::string&);

}  // namespace bmfa
