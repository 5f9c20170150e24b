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

#ifndef BMFA_GRAPH_H_
#define BMFA_GRAPH_H_

#include "bmfa/kernels.h"
#include "bmfa/tape.h"

// Tape-recording wrappers over the kernels. Parameter structs are bound by
// address and must outlive the tape.
namespace bmfa::nn {

template <typename T>
Var Conv(Tape<T>& tape, Var x, const ConvParams<T>& p);

// Mode comes from the state; train mode updates its running statistics.
template <typename T>
Var BatchNorm(Tape<T>& tape, Var x, BatchNormState<T>& s);

template <typename T>
Var Relu(Tape<T>& tape, Var x);

template <typename T>
Var Tanh(Tape<T>& tape, Var x);

template <typename T>
Var UpsampleFreq2x(Tape<T>& tape, Var x);

template <typename T>
Var Concat(Tape<T>& tape, Var x, Var y);

template <typename T>
Var StatsPool(Tape<T>& tape, Var x);

template <typename T>
Var Linear(Tape<T>& tape, Var x, const LinearParams<T>& p);

template <typename T>
Var Add(Tape<T>& tape, Var x, Var y);

template <typename T>
Var Mul(Tape<T>& tape, Var x, Var y);

// 1 + x and 1 - x with the scalar broadcast.
template <typename T>
Var OnePlus(Tape<T>& tape, Var x);
template <typename T>
Var OneMinus(Tape<T>& tape, Var x);

// Sum of elementwise products with a fixed weight tensor; a convenient
// scalar probe for gradient checks.
template <typename T>
Var WeightedSum(Tape<T>& tape, Var x, const Tensor<T>& weights);

}  // namespace bmfa::nn

#endif  // BMFA_GRAPH_H_
