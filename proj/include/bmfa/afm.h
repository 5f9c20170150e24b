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

#ifndef BMFA_AFM_H_
#define BMFA_AFM_H_

#include <string>

#include "bmfa/kernels.h"
#include "bmfa/params.h"
#include "bmfa/tape.h"

namespace bmfa {

// Attentional fusion module. For two maps X, Y with C channels:
//   S = tanh(BN2(W2 * ReLU(BN1(W1 * [X, Y]))))
//   F = (1 + S) * X + (1 - S) * Y
// W1 maps 2C -> C/r channels and W2 maps C/r -> C, both 1x1 without bias.
// The fusion weights 1+S and 1-S sum to 2 at every position; the module is
// ordered, so AFM(X, Y) != AFM(Y, X) in general.
template <typename T>
struct AfmParams {
  int channels = 0;
  int reduction = 4;
  ConvParams<T> w1;
  BatchNormState<T> bn1;
  ConvParams<T> w2;
  BatchNormState<T> bn2;

  void Collect(const std::string& prefix, ParamList<T>& list);
};

// Throws InvalidInput unless channels is a positive multiple of reduction.
template <typename T>
AfmParams<T> BuildAfm(int channels, int reduction, Rng& rng);

template <typename T>
Var AttentionMap(Tape<T>& tape, AfmParams<T>& p, Var x, Var y);

template <typename T>
Var AfmFuse(Tape<T>& tape, AfmParams<T>& p, Var x, Var y);

// Untracked conveniences over a throwaway tape.
template <typename T>
Tensor<T> AttentionMap(AfmParams<T>& p, const Tensor<T>& x,
                       const Tensor<T>& y);
template <typename T>
Tensor<T> AfmFuse(AfmParams<T>& p, const Tensor<T>& x, const Tensor<T>& y);

}  // namespace bmfa

#endif  // BMFA_AFM_H_
