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

#ifndef BMFA_AGGREGATION_H_
#define BMFA_AGGREGATION_H_

#include <array>
#include <optional>
#include <string>

#include "bmfa/afm.h"
#include "bmfa/backbone.h"
#include "bmfa/kernels.h"
#include "bmfa/params.h"
#include "bmfa/tape.h"

namespace bmfa {

enum class Strategy { kBaseline, kMfaS34, kMeaFpm, kBmfa };
enum class Fusion { kAdd, kConcat, kAfm };

// A cell of the strategy x fusion grid. Baseline takes no fusion; every
// other strategy requires one.
struct StrategyId {
  Strategy strategy = Strategy::kBmfa;
  std::optional<Fusion> fusion = Fusion::kAfm;

  // Throws InvalidInput on unknown names or an invalid combination.
  static StrategyId Parse(const std::string& strategy,
                          const std::string& fusion);
  void Validate() const;
  std::string StrategyName() const;
  std::string FusionName() const;  // "-" for baseline
  std::string ToString() const;
  bool operator==(const StrategyId&) const = default;
};

std::string ToString(Strategy s);
std::string ToString(Fusion f);

struct ModelConfig {
  StrategyId id;
  BackboneConfig backbone;
  int reduction = 4;
  int embedding_dim = 512;
  // Lowest backbone stage fed to the bidirectional branches (bmfa only):
  // 1 uses C1..C4, 2 uses C2..C4, 3 uses C3..C4.
  int lowest_stage = 1;

  void Validate() const;
};

// 1x1 convolution followed by batch norm.
template <typename T>
struct ConvBn {
  ConvParams<T> conv;
  BatchNormState<T> bn;
  void Collect(const std::string& prefix, ParamList<T>& list);
};

// Merge operator used at every aggregation point: elementwise add,
// concatenation restored to C channels by a 1x1 conv + BN, or AFM.
template <typename T>
struct FusionParams {
  Fusion kind = Fusion::kAdd;
  std::optional<ConvBn<T>> concat_proj;
  std::optional<AfmParams<T>> afm;
  void Collect(const std::string& prefix, ParamList<T>& list);
};

template <typename T>
FusionParams<T> BuildFusion(Fusion kind, int channels, int reduction,
                            Rng& rng);

// Merges x (the pathway operand) with y (the lateral operand).
template <typename T>
Var Fuse(Tape<T>& tape, FusionParams<T>& p, Var x, Var y);

// One merge step of a pathway at stage i.
template <typename T>
struct PathwayLevel {
  std::optional<ConvParams<T>> down;  // bottom-up only: 3x3, stride (1,2)
  ConvBn<T> transfer;                 // W^tb (reduce) or W^bt (raise)
  ConvBn<T> lateral;                  // W^lc re-encoding C_i
  FusionParams<T> fusion;
};

// 3x3 conv + BN + ReLU, channel preserving.
template <typename T>
struct Refine {
  ConvParams<T> conv;
  BatchNormState<T> bn;
  void Collect(const std::string& prefix, ParamList<T>& list);
};

template <typename T>
struct TopDownParams {
  int lowest_stage = 1;
  std::array<std::optional<PathwayLevel<T>>, 5> levels;  // indexed by stage
  Refine<T> refine;
  void Collect(const std::string& prefix, ParamList<T>& list);
};

template <typename T>
struct BottomUpParams {
  int lowest_stage = 1;
  std::array<std::optional<PathwayLevel<T>>, 5> levels;
  Refine<T> refine;
  void Collect(const std::string& prefix, ParamList<T>& list);
};

// fc1 (no bias) + BN + ReLU + fc2; the embedding is fc2's output.
template <typename T>
struct HeadParams {
  LinearParams<T> fc1;
  BatchNormState<T> bn1;
  LinearParams<T> fc2;
  void Collect(const std::string& prefix, ParamList<T>& list);
};

// Fig.-1(a)-style two-stage aggregation: C4 projected to C3's channels,
// upsampled in frequency, and fused with C3 before pooling.
template <typename T>
struct MfaS34Params {
  ConvBn<T> project;
  FusionParams<T> fusion;
  void Collect(const std::string& prefix, ParamList<T>& list);
};

// Top-down feature pyramid with one pooled embedding per stage; the four
// pooled vectors are concatenated before the head.
template <typename T>
struct FpmParams {
  std::array<std::optional<PathwayLevel<T>>, 5> levels;
  std::array<Refine<T>, 4> refine;
  void Collect(const std::string& prefix, ParamList<T>& list);
};

// Intermediate values recorded for shape tracing and tests.
struct BranchTrace {
  std::array<Var, 5> maps;  // F_i by stage number; unused entries invalid
  Var refined;
  Var pooled;
};

template <typename T>
TopDownParams<T> BuildTopDown(const BackboneConfig& bc, int lowest_stage,
                              Fusion fusion, int reduction, Rng& rng);
template <typename T>
BottomUpParams<T> BuildBottomUp(const BackboneConfig& bc, int lowest_stage,
                                Fusion fusion, int reduction, Rng& rng);

// F_4 = C_4; F_i = Fuse(Up(BN(W^tb_i * F_{i+1})), BN(W^lc_i * C_i)).
// Returns the pooled h_tb.
template <typename T>
Var TopDownForward(Tape<T>& tape, TopDownParams<T>& p,
                   const BackboneFeatures& c, BranchTrace* trace = nullptr);

// F_L = C_L; F_i = Fuse(BN(W^bt_i * Down(F_{i-1})), BN(W^lc_i * C_i)).
// Returns the pooled h_bt.
template <typename T>
Var BottomUpForward(Tape<T>& tape, BottomUpParams<T>& p,
                    const BackboneFeatures& c, BranchTrace* trace = nullptr);

template <typename T>
Var HeadForward(Tape<T>& tape, HeadParams<T>& p, Var pooled);

// Concatenates h_tb and h_bt and runs the head.
template <typename T>
Var Embed(Tape<T>& tape, HeadParams<T>& p, Var h_tb, Var h_bt);

struct ForwardTrace {
  BackboneFeatures backbone;
  BranchTrace top_down;
  BranchTrace bottom_up;
  Var head_input;
  Var embedding;
};

// Full embedding network for one grid cell.
template <typename T>
class SpeakerNet {
 public:
  static SpeakerNet Build(const ModelConfig& config, uint64_t seed);

  // x: (N, 1, T, n_mels). Returns the (N, embedding_dim, 1, 1) embedding.
  Var Forward(Tape<T>& tape, Var x, ForwardTrace* trace = nullptr);
  // Untracked forward in the current BN mode.
  Tensor<T> Embed(const Tensor<T>& x);

  // Pointers into this object; rebuild after moving the net.
  ParamList<T> Params();
  void SetMode(BnMode mode);
  int HeadInputDim() const;

  const ModelConfig& config() const { return config_; }

  BackboneParams<T> backbone;
  std::optional<TopDownParams<T>> top_down;
  std::optional<BottomUpParams<T>> bottom_up;
  std::optional<MfaS34Params<T>> mfa;
  std::optional<FpmParams<T>> fpm;
  HeadParams<T> head;

 private:
  ModelConfig config_;
};

}  // namespace bmfa

#endif  // BMFA_AGGREGATION_H_
