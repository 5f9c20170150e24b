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

#include "bmfa/backbone.h"

#include "bmfa/graph.h"

namespace bmfa {

template <typename T>
BasicBlockParams<T> BuildBasicBlock(Rng& rng, int cin, int cout,
                                    ConvGeometry stride) {
  BasicBlockParams<T> b;
  b.conv1 = HeConv<T>(rng, cout, cin, 3, 3,
                      {stride.stride_t, stride.stride_f, 1, 1});
  b.bn1 = BatchNormState<T>::Identity(cout);
  b.conv2 = HeConv<T>(rng, cout, cout, 3, 3, {1, 1, 1, 1});
  b.bn2 = BatchNormState<T>::Identity(cout);
  if (stride.stride_t != 1 || stride.stride_f != 1 || cin != cout) {
    b.proj = HeConv<T>(rng, cout, cin, 1, 1,
                       {stride.stride_t, stride.stride_f, 0, 0});
    b.proj_bn = BatchNormState<T>::Identity(cout);
  }
  return b;
}

template <typename T>
BackboneParams<T> BuildBackbone(const BackboneConfig& config, Rng& rng) {
  BMFA_REQUIRE(config.width >= 1, "backbone: width must be positive");
  BMFA_REQUIRE(config.n_mels % 16 == 0,
               "backbone: n_mels must be divisible by 16");
  for (int b : config.blocks) {
    BMFA_REQUIRE(b >= 1, "backbone: every stage needs at least one block");
  }
  BackboneParams<T> p;
  p.config = config;
  p.conv0 = HeConv<T>(rng, config.width, 1, 7, 7, {1, 1, 3, 3});
  p.bn0 = BatchNormState<T>::Identity(config.width);
  int cin = config.width;
  for (int s = 0; s < 4; ++s) {
    const int cout = config.StageChannels(s + 1);
    const ConvGeometry first = s == 0 ? ConvGeometry{2, 2, 0, 0}
                                      : ConvGeometry{1, 2, 0, 0};
    for (int b = 0; b < config.blocks[s]; ++b) {
      p.stages[s].push_back(BuildBasicBlock<T>(
          rng, cin, cout, b == 0 ? first : ConvGeometry{}));
      cin = cout;
    }
  }
  return p;
}

template <typename T>
BackboneParams<T> BuildBackbone(const BackboneConfig& config, uint64_t seed) {
  Rng rng(seed);
  return BuildBackbone<T>(config, rng);
}

template <typename T>
void BackboneParams<T>::Collect(const std::string& prefix,
                                ParamList<T>& list) {
  list.AddConv(prefix + ".conv0", conv0);
  list.AddBatchNorm(prefix + ".bn0", bn0);
  for (int s = 0; s < 4; ++s) {
    for (size_t b = 0; b < stages[s].size(); ++b) {
      const std::string name = prefix + ".stage" + std::to_string(s + 1) +
                               ".block" + std::to_string(b + 1);
      auto& blk = stages[s][b];
      list.AddConv(name + ".conv1", blk.conv1);
      list.AddBatchNorm(name + ".bn1", blk.bn1);
      list.AddConv(name + ".conv2", blk.conv2);
      list.AddBatchNorm(name + ".bn2", blk.bn2);
      if (blk.proj) {
        list.AddConv(name + ".proj", *blk.proj);
        list.AddBatchNorm(name + ".proj_bn", *blk.proj_bn);
      }
    }
  }
}

template <typename T>
Var BasicBlockForward(Tape<T>& tape, BasicBlockParams<T>& p, Var x) {
  Var h = nn::Relu(tape, nn::BatchNorm(tape, nn::Conv(tape, x, p.conv1),
                                       p.bn1));
  h = nn::BatchNorm(tape, nn::Conv(tape, h, p.conv2), p.bn2);
  Var shortcut = x;
  if (p.proj) {
    shortcut = nn::BatchNorm(tape, nn::Conv(tape, x, *p.proj), *p.proj_bn);
  }
  return nn::Relu(tape, nn::Add(tape, h, shortcut));
}

template <typename T>
BackboneFeatures BackboneForward(Tape<T>& tape, BackboneParams<T>& p, Var x) {
  const Shape& s = tape.value(x).shape();
  BMFA_REQUIRE(s.c == 1 && s.f == p.config.n_mels,
               "backbone: expected input (N,1,T," +
                   std::to_string(p.config.n_mels) + "), got " +
                   s.ToString());
  BMFA_REQUIRE(s.t >= 2 && s.t % 2 == 0,
               "backbone: time length must be even and >= 2, got " +
                   std::to_string(s.t));
  Var h = nn::Relu(tape, nn::BatchNorm(tape, nn::Conv(tape, x, p.conv0),
                                       p.bn0));
  BackboneFeatures out;
  for (int st = 0; st < 4; ++st) {
    for (auto& blk : p.stages[st]) h = BasicBlockForward(tape, blk, h);
    out[st] = h;
  }
  return out;
}

#define BMFA_INSTANTIATE_BACKBONE(T)                                         \
  template struct BackboneParams<T>;                                         \
  template BasicBlockParams<T> BuildBasicBlock(Rng&, int, int,               \
                                               ConvGeometry);                \
  template BackboneParams<T> BuildBackbone(const BackboneConfig&, Rng&);     \
  template BackboneParams<T> BuildBackbone(const BackboneConfig&, uint64_t); \
  template Var BasicBlockForward(Tape<T>&, BasicBlockParams<T>&, Var);       \
  template BackboneFeatures BackboneForward(Tape<T>&, BackboneParams<T>&,    \
                                            Var);

BMFA_INSTANTIATE_BACKBONE(float)
BMFA_INSTANTIATE_BACKBONE(double)

#undef BMFA_INSTANTIATE_BACKBONE

}  // namespace bmfa
