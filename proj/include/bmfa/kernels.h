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

#ifndef BMFA_KERNELS_H_
#define BMFA_KERNELS_H_

#include <optional>
#include <utility>
#include <vector>

#include "bmfa/tensor.h"

namespace bmfa {

// Differentiable kernels. Every forward map has a matching *Backward that
// returns analytic gradients for its inputs and parameters. All kernels are
// pure except BatchNorm in train mode, which updates running statistics.

enum class BnMode { kTrain, kInfer };

struct ConvGeometry {
  int stride_t = 1;
  int stride_f = 1;
  int pad_t = 0;
  int pad_f = 0;
};

template <typename T>
struct ConvParams {
  Tensor<T> weight;  // (Cout, Cin, kT, kF)
  std::optional<Tensor<T>> bias;  // (1, Cout, 1, 1)
  ConvGeometry geometry;
};

template <typename T>
struct ConvGrads {
  Tensor<T> x;
  Tensor<T> weight;
  Tensor<T> bias;  // empty when the layer has no bias
};

Shape ConvOutputShape(const Shape& x, const Shape& weight,
                      const ConvGeometry& g);

template <typename T>
Tensor<T> Conv2d(const Tensor<T>& x, const ConvParams<T>& p);

// grads.x is left empty when input_grad is false.
template <typename T>
ConvGrads<T> Conv2dBackward(const Tensor<T>& x, const ConvParams<T>& p,
                            const Tensor<T>& upstream,
                            bool input_grad = true);

template <typename T>
struct BatchNormState {
  Tensor<T> gamma;         // (1, C, 1, 1)
  Tensor<T> beta;          // (1, C, 1, 1)
  Tensor<T> running_mean;  // (1, C, 1, 1)
  Tensor<T> running_var;   // (1, C, 1, 1)
  double eps = 1e-5;
  double momentum = 0.1;
  BnMode mode = BnMode::kTrain;

  // gamma=1, beta=0, running mean 0, running variance 1.
  static BatchNormState Identity(int channels);
  int channels() const { return gamma.c(); }
};

template <typename T>
struct BatchNormCache {
  Tensor<T> normalized;
  std::vector<T> inv_std;
  BnMode mode = BnMode::kTrain;
};

template <typename T>
struct BatchNormGrads {
  Tensor<T> x;
  Tensor<T> gamma;
  Tensor<T> beta;
};

// Normalizes each channel over (N, T, F). Train mode uses the biased batch
// variance for normalization and folds the unbiased variance into the
// running statistics with rate `momentum`.
template <typename T>
Tensor<T> BatchNorm(const Tensor<T>& x, BatchNormState<T>& state,
                    BatchNormCache<T>* cache = nullptr);

template <typename T>
BatchNormGrads<T> BatchNormBackward(const BatchNormCache<T>& cache,
                                    const Tensor<T>& gamma,
                                    const Tensor<T>& upstream);

template <typename T>
Tensor<T> Relu(const Tensor<T>& x);
template <typename T>
Tensor<T> ReluBackward(const Tensor<T>& x, const Tensor<T>& upstream);

template <typename T>
Tensor<T> Tanh(const Tensor<T>& x);
// Takes the forward output y = tanh(x).
template <typename T>
Tensor<T> TanhBackward(const Tensor<T>& y, const Tensor<T>& upstream);

// Bilinear x2 upsampling along frequency with half-pixel source positions:
// src = (dst + 0.5) / 2 - 0.5, clamped to [0, F-1].
template <typename T>
Tensor<T> UpsampleFreq2x(const Tensor<T>& x);
template <typename T>
Tensor<T> UpsampleFreq2xBackward(const Tensor<T>& upstream);

template <typename T>
Tensor<T> ConcatChannels(const Tensor<T>& x, const Tensor<T>& y);
// Inverse of ConcatChannels: the first `leading` channels go to .first.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> SplitChannels(const Tensor<T>& t,
                                              int leading);

inline constexpr double kStatsPoolVarianceFloor = 1e-10;

// (N, C, T, F) -> (N, 2*C*F, 1, 1): per-(c, f) mean over time followed by
// the population standard deviation over time.
template <typename T>
Tensor<T> StatsPool(const Tensor<T>& x);
template <typename T>
Tensor<T> StatsPoolBackward(const Tensor<T>& x, const Tensor<T>& pooled,
                            const Tensor<T>& upstream);

template <typename T>
struct LinearParams {
  Tensor<T> weight;  // (Dout, Din, 1, 1)
  std::optional<Tensor<T>> bias;  // (1, Dout, 1, 1)
};

template <typename T>
struct LinearGrads {
  Tensor<T> x;
  Tensor<T> weight;
  Tensor<T> bias;
};

// x is (N, Din, 1, 1); output (N, Dout, 1, 1).
template <typename T>
Tensor<T> Linear(const Tensor<T>& x, const LinearParams<T>& p);
template <typename T>
LinearGrads<T> LinearBackward(const Tensor<T>& x, const LinearParams<T>& p,
                              const Tensor<T>& upstream);

template <typename T>
Tensor<T> Add(const Tensor<T>& x, const Tensor<T>& y);
template <typename T>
Tensor<T> Sub(const Tensor<T>& x, const Tensor<T>& y);
template <typename T>
Tensor<T> Mul(const Tensor<T>& x, const Tensor<T>& y);
// Broadcast scalar: s + x.
template <typename T>
Tensor<T> AddScalar(T s, const Tensor<T>& x);
// Broadcast scalar: s - x.
template <typename T>
Tensor<T> ScalarSub(T s, const Tensor<T>& x);
template <typename T>
Tensor<T> Scale(T s, const Tensor<T>& x);

}  // namespace bmfa

#endif  // BMFA_KERNELS_H_
