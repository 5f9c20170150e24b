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

#include "bmfa/params.h"

#include <cmath>

namespace bmfa {

template <typename T>
Tensor<T>& ParamList<T>::Get(const std::string& name) const {
  for (const auto& r : refs_) {
    if (r.name == name) return *r.tensor;
  }
  throw InvalidInput("unknown parameter " + name);
}

template <typename T>
size_t ParamList<T>::TrainableCount() const {
  size_t total = 0;
  for (const auto& r : refs_) {
    if (r.trainable) total += r.tensor->size();
  }
  return total;
}

template <typename T>
void FillNormal(Rng& rng, Tensor<T>& t, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
}

template <typename T>
ConvParams<T> HeConv(Rng& rng, int cout, int cin, int kt, int kf,
                     ConvGeometry geometry, bool bias) {
  ConvParams<T> p;
  p.weight = Tensor<T>({cout, cin, kt, kf});
  FillNormal(rng, p.weight, std::sqrt(2.0 / (cin * kt * kf)));
  if (bias) p.bias = Tensor<T>({1, cout, 1, 1});
  p.geometry = geometry;
  return p;
}

template <typename T>
LinearParams<T> HeLinear(Rng& rng, int dout, int din, bool bias) {
  LinearParams<T> p;
  p.weight = Tensor<T>({dout, din, 1, 1});
  FillNormal(rng, p.weight, std::sqrt(2.0 / din));
  if (bias) p.bias = Tensor<T>({1, dout, 1, 1});
  return p;
}

template class ParamList<float>;
template class ParamList<double>;
template void FillNormal(Rng&, Tensor<float>&, double);
template void FillNormal(Rng&, Tensor<double>&, double);
template ConvParams<float> HeConv(Rng&, int, int, int, int, ConvGeometry,
                                  bool);
template ConvParams<double> HeConv(Rng&, int, int, int, int, ConvGeometry,
                                   bool);
template LinearParams<float> HeLinear(Rng&, int, int, bool);
template LinearParams<double> HeLinear(Rng&, int, int, bool);

}  // namespace bmfa
