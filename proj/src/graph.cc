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

#include "bmfa/graph.h"

#include <memory>

namespace bmfa::nn {

template <typename T>
Var Conv(Tape<T>& tape, Var x, const ConvParams<T>& p) {
  Var w = tape.Param(&p.weight);
  Var b = p.bias ? tape.Param(&*p.bias) : Var{};
  Tensor<T> y = Conv2d(tape.value(x), p);
  auto backward = [x, w, b, &p](Tape<T>& t, const Tensor<T>& g) {
    ConvGrads<T> grads =
        Conv2dBackward(t.value(x), p, g, t.requires_grad(x));
    if (!grads.x.empty()) t.Accumulate(x, std::move(grads.x));
    t.Accumulate(w, std::move(grads.weight));
    if (b.valid()) t.Accumulate(b, std::move(grads.bias));
  };
  if (b.valid()) return tape.Record(std::move(y), {x, w, b}, backward);
  return tape.Record(std::move(y), {x, w}, backward);
}

template <typename T>
Var BatchNorm(Tape<T>& tape, Var x, BatchNormState<T>& s) {
  Var gamma = tape.Param(&s.gamma);
  Var beta = tape.Param(&s.beta);
  auto cache = std::make_shared<BatchNormCache<T>>();
  Tensor<T> y = bmfa::BatchNorm(tape.value(x), s, cache.get());
  return tape.Record(
      std::move(y), {x, gamma, beta},
      [x, gamma, beta, cache, &s](Tape<T>& t, const Tensor<T>& g) {
        BatchNormGrads<T> grads = BatchNormBackward(*cache, s.gamma, g);
        t.Accumulate(x, std::move(grads.x));
        t.Accumulate(gamma, std::move(grads.gamma));
        t.Accumulate(beta, std::move(grads.beta));
      });
}

template <typename T>
Var Relu(Tape<T>& tape, Var x) {
  return tape.Record(bmfa::Relu(tape.value(x)), {x},
                     [x](Tape<T>& t, const Tensor<T>& g) {
                       t.Accumulate(x, ReluBackward(t.value(x), g));
                     });
}

template <typename T>
Var Tanh(Tape<T>& tape, Var x) {
  auto y = std::make_shared<Tensor<T>>(bmfa::Tanh(tape.value(x)));
  return tape.Record(*y, {x}, [x, y](Tape<T>& t, const Tensor<T>& g) {
    t.Accumulate(x, TanhBackward(*y, g));
  });
}

template <typename T>
Var UpsampleFreq2x(Tape<T>& tape, Var x) {
  return tape.Record(bmfa::UpsampleFreq2x(tape.value(x)), {x},
                     [x](Tape<T>& t, const Tensor<T>& g) {
                       t.Accumulate(x, UpsampleFreq2xBackward(g));
                     });
}

template <typename T>
Var Concat(Tape<T>& tape, Var x, Var y) {
  const int leading = tape.value(x).c();
  return tape.Record(ConcatChannels(tape.value(x), tape.value(y)), {x, y},
                     [x, y, leading](Tape<T>& t, const Tensor<T>& g) {
                       auto parts = SplitChannels(g, leading);
                       t.Accumulate(x, std::move(parts.first));
                       t.Accumulate(y, std::move(parts.second));
                     });
}

template <typename T>
Var StatsPool(Tape<T>& tape, Var x) {
  auto pooled = std::make_shared<Tensor<T>>(bmfa::StatsPool(tape.value(x)));
  return tape.Record(*pooled, {x},
                     [x, pooled](Tape<T>& t, const Tensor<T>& g) {
                       t.Accumulate(x, StatsPoolBackward(t.value(x),
                                                         *pooled, g));
                     });
}

template <typename T>
Var Linear(Tape<T>& tape, Var x, const LinearParams<T>& p) {
  Var w = tape.Param(&p.weight);
  Var b = p.bias ? tape.Param(&*p.bias) : Var{};
  Tensor<T> y = bmfa::Linear(tape.value(x), p);
  auto backward = [x, w, b, &p](Tape<T>& t, const Tensor<T>& g) {
    LinearGrads<T> grads = LinearBackward(t.value(x), p, g);
    t.Accumulate(x, std::move(grads.x));
    t.Accumulate(w, std::move(grads.weight));
    if (b.valid()) t.Accumulate(b, std::move(grads.bias));
  };
  if (b.valid()) return tape.Record(std::move(y), {x, w, b}, backward);
  return tape.Record(std::move(y), {x, w}, backward);
}

template <typename T>
Var Add(Tape<T>& tape, Var x, Var y) {
  return tape.Record(bmfa::Add(tape.value(x), tape.value(y)), {x, y},
                     [x, y](Tape<T>& t, const Tensor<T>& g) {
                       t.Accumulate(x, g);
                       t.Accumulate(y, g);
                     });
}

template <typename T>
Var Mul(Tape<T>& tape, Var x, Var y) {
  return tape.Record(bmfa::Mul(tape.value(x), tape.value(y)), {x, y},
                     [x, y](Tape<T>& t, const Tensor<T>& g) {
                       if (t.requires_grad(x)) {
                         t.Accumulate(x, bmfa::Mul(g, t.value(y)));
                       }
                       if (t.requires_grad(y)) {
                         t.Accumulate(y, bmfa::Mul(g, t.value(x)));
                       }
                     });
}

template <typename T>
Var OnePlus(Tape<T>& tape, Var x) {
  return tape.Record(AddScalar(T(1), tape.value(x)), {x},
                     [x](Tape<T>& t, const Tensor<T>& g) {
                       t.Accumulate(x, g);
                     });
}

template <typename T>
Var OneMinus(Tape<T>& tape, Var x) {
  return tape.Record(ScalarSub(T(1), tape.value(x)), {x},
                     [x](Tape<T>& t, const Tensor<T>& g) {
                       t.Accumulate(x, Scale(T(-1), g));
                     });
}

template <typename T>
Var WeightedSum(Tape<T>& tape, Var x, const Tensor<T>& weights) {
  const Tensor<T>& v = tape.value(x);
  BMFA_REQUIRE(v.shape() == weights.shape(), "weighted_sum: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    acc += static_cast<double>(v[i]) * weights[i];
  }
  return tape.Record(Tensor<T>({1, 1, 1, 1}, static_cast<T>(acc)), {x},
                     [x, &weights](Tape<T>& t, const Tensor<T>& g) {
                       t.Accumulate(x, Scale(g[0], weights));
                     });
}

#define BMFA_INSTANTIATE_GRAPH(T)                                            \
  template Var Conv(Tape<T>&, Var, const ConvParams<T>&);                    \
  template Var BatchNorm(Tape<T>&, Var, BatchNormState<T>&);                 \
  template Var Relu(Tape<T>&, Var);                                          \
  template Var Tanh(Tape<T>&, Var);                                          \
  template Var UpsampleFreq2x(Tape<T>&, Var);                                \
  template Var Concat(Tape<T>&, Var, Var);                                   \
  template Var StatsPool(Tape<T>&, Var);                                     \
  template Var Linear(Tape<T>&, Var, const LinearParams<T>&);                \
  template Var Add(Tape<T>&, Var, Var);                                      \
  template Var Mul(Tape<T>&, Var, Var);                                      \
  template Var OnePlus(Tape<T>&, Var);                                       \
  template Var OneMinus(Tape<T>&, Var);                                      \
  template Var WeightedSum(Tape<T>&, Var, const Tensor<T>&);

BMFA_INSTANTIATE_GRAPH(float)
BMFA_INSTANTIATE_GRAPH(double)

#undef BMFA_INSTANTIATE_GRAPH

}  // namespace bmfa::nn
