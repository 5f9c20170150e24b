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

#include "bmfa/afm.h"

#include "bmfa/graph.h"

namespace bmfa {
namespace {

template <typename T>
void CheckOperands(const AfmParams<T>& p, const Tensor<T>& x,
                   const Tensor<T>& y) {
  BMFA_REQUIRE(x.shape() == y.shape(),
               "afm: operand shapes differ " + x.shape().ToString() +
                   " vs " + y.shape().ToString());
  BMFA_REQUIRE(x.c() == p.channels,
               "afm: module built for " + std::to_string(p.channels) +
                   " channels, got " + std::to_string(x.c()));
}

}  // namespace

template <typename T>
AfmParams<T> BuildAfm(int channels, int reduction, Rng& rng) {
  BMFA_REQUIRE(reduction >= 1, "afm: reduction ratio must be >= 1");
  BMFA_REQUIRE(channels >= reduction && channels % reduction == 0,
               "afm: channel count " + std::to_string(channels) +
                   " is not a positive multiple of r=" +
                   std::to_string(reduction));
  AfmParams<T> p;
  p.channels = channels;
  p.reduction = reduction;
  const int hidden = channels / reduction;
  p.w1 = HeConv<T>(rng, hidden, 2 * channels, 1, 1);
  p.bn1 = BatchNormState<T>::Identity(hidden);
  p.w2 = HeConv<T>(rng, channels, hidden, 1, 1);
  p.bn2 = BatchNormState<T>::Identity(channels);
  return p;
}

template <typename T>
void AfmParams<T>::Collect(const std::string& prefix, ParamList<T>& list) {
  list.AddConv(prefix + ".W1", w1);
  list.AddBatchNorm(prefix + ".bn1", bn1);
  list.AddConv(prefix + ".W2", w2);
  list.AddBatchNorm(prefix + ".bn2", bn2);
}

template <typename T>
Var AttentionMap(Tape<T>& tape, AfmParams<T>& p, Var x, Var y) {
  CheckOperands(p, tape.value(x), tape.value(y));
  Var h = nn::Conv(tape, nn::Concat(tape, x, y), p.w1);
  h = nn::Relu(tape, nn::BatchNorm(tape, h, p.bn1));
  h = nn::BatchNorm(tape, nn::Conv(tape, h, p.w2), p.bn2);
  return nn::Tanh(tape, h);
}

template <typename T>
Var AfmFuse(Tape<T>& tape, AfmParams<T>& p, Var x, Var y) {
  Var s = AttentionMap(tape, p, x, y);
  return nn::Add(tape, nn::Mul(tape, nn::OnePlus(tape, s), x),
                 nn::Mul(tape, nn::OneMinus(tape, s), y));
}

template <typename T>
Tensor<T> AttentionMap(AfmParams<T>& p, const Tensor<T>& x,
                       const Tensor<T>& y) {
  Tape<T> tape;
  return tape.value(AttentionMap(tape, p, tape.Input(x), tape.Input(y)));
}

template <typename T>
Tensor<T> AfmFuse(AfmParams<T>& p, const Tensor<T>& x, const Tensor<T>& y) {
  Tape<T> tape;
  return tape.value(AfmFuse(tape, p, tape.Input(x), tape.Input(y)));
}

#define BMFA_INSTANTIATE_AFM(T)                                              \
  template struct AfmParams<T>;                                              \
  template AfmParams<T> BuildAfm(int, int, Rng&);                            \
  template Var AttentionMap(Tape<T>&, AfmParams<T>&, Var, Var);              \
  template Var AfmFuse(Tape<T>&, AfmParams<T>&, Var, Var);                   \
  template Tensor<T> AttentionMap(AfmParams<T>&, const Tensor<T>&,           \
                                  const Tensor<T>&);                         \
  template Tensor<T> AfmFuse(AfmParams<T>&, const Tensor<T>&,                \
                             const Tensor<T>&);

BMFA_INSTANTIATE_AFM(float)
BMFA_INSTANTIATE_AFM(double)

#undef BMFA_INSTANTIATE_AFM

}  // namespace bmfa
