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

#ifndef BMFA_BACKBONE_H_
#define BMFA_BACKBONE_H_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "bmfa/kernels.h"
#include "bmfa/params.h"
#include "bmfa/tape.h"

namespace bmfa {

// ResNet34 layout: a 7x7 input convolution followed by four stages of basic
// residual blocks. Stage i outputs width * 2^(i-1) channels.
//
// Resolution schedule for an (N, 1, T, 64) input:
//   conv0           stride (1,1)  -> (N, w,  T,   64)
//   stage1 block1   stride (2,2)  -> (N, w,  T/2, 32)
//   stage2 block1   stride (1,2)  -> (N, 2w, T/2, 16)
//   stage3 block1   stride (1,2)  -> (N, 4w, T/2, 8)
//   stage4 block1   stride (1,2)  -> (N, 8w, T/2, 4)
struct BackboneConfig {
  int width = 32;
  std::array<int, 4> blocks = {3, 4, 6, 3};
  int n_mels = 64;

  int StageChannels(int stage) const { return width << (stage - 1); }
  int StageFreq(int stage) const { return n_mels >> stage; }
};

template <typename T>
struct BasicBlockParams {
  ConvParams<T> conv1;
  BatchNormState<T> bn1;
  ConvParams<T> conv2;
  BatchNormState<T> bn2;
  // Present iff the block changes stride or channel count.
  std::optional<ConvParams<T>> proj;
  std::optional<BatchNormState<T>> proj_bn;
};

template <typename T>
struct BackboneParams {
  BackboneConfig config;
  ConvParams<T> conv0;
  BatchNormState<T> bn0;
  std::array<std::vector<BasicBlockParams<T>>, 4> stages;

  void Collect(const std::string& prefix, ParamList<T>& list);
};

// Stage outputs C1..C4 as tape values.
using BackboneFeatures = std::array<Var, 4>;

template <typename T>
BasicBlockParams<T> BuildBasicBlock(Rng& rng, int cin, int cout,
                                    ConvGeometry stride);

template <typename T>
BackboneParams<T> BuildBackbone(const BackboneConfig& config, Rng& rng);
template <typename T>
BackboneParams<T> BuildBackbone(const BackboneConfig& config, uint64_t seed);

// conv-BN-ReLU-conv-BN, shortcut add, ReLU.
template <typename T>
Var BasicBlockForward(Tape<T>& tape, BasicBlockParams<T>& p, Var x);

// Requires x of shape (N, 1, T, n_mels) with T even and >= 2.
template <typename T>
BackboneFeatures BackboneForward(Tape<T>& tape, BackboneParams<T>& p, Var x);

}  // namespace bmfa

#endif  // BMFA_BACKBONE_H_
