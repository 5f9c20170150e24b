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

#include "bmfa/aggregation.h"

#include "bmfa/graph.h"

namespace bmfa {

std::string ToString(Strategy s) {
  switch (s) {
    case Strategy::kBaseline:
      return "baseline";
    case Strategy::kMfaS34:
      return "mfa_s34";
    case Strategy::kMeaFpm:
      return "mea_fpm";
    case Strategy::kBmfa:
      return "bmfa";
  }
  return "?";
}

std::string ToString(Fusion f) {
  switch (f) {
    case Fusion::kAdd:
      return "add";
    case Fusion::kConcat:
      return "concat";
    case Fusion::kAfm:
      return "afm";
  }
  return "?";
}

StrategyId StrategyId::Parse(const std::string& strategy,
                             const std::string& fusion) {
  StrategyId id;
  if (strategy == "baseline") {
    id.strategy = Strategy::kBaseline;
  } else if (strategy == "mfa_s34") {
    id.strategy = Strategy::kMfaS34;
  } else if (strategy == "mea_fpm") {
    id.strategy = Strategy::kMeaFpm;
  } else if (strategy == "bmfa") {
    id.strategy = Strategy::kBmfa;
  } else {
    throw InvalidInput("unknown strategy '" + strategy +
                       "' (expected baseline, mfa_s34, mea_fpm, bmfa)");
  }
  if (fusion.empty() || fusion == "-" || fusion == "none") {
    id.fusion.reset();
  } else if (fusion == "add") {
    id.fusion = Fusion::kAdd;
  } else if (fusion == "concat") {
    id.fusion = Fusion::kConcat;
  } else if (fusion == "afm") {
    id.fusion = Fusion::kAfm;
  } else {
    throw InvalidInput("unknown fusion '" + fusion +
                       "' (expected add, concat, afm)");
  }
  id.Validate();
  return id;
}

void StrategyId::Validate() const {
  if (strategy == Strategy::kBaseline) {
    BMFA_REQUIRE(!fusion.has_value(),
                 "baseline strategy accepts no fusion choice");
  } else {
    BMFA_REQUIRE(fusion.has_value(),
                 bmfa::ToString(strategy) + " strategy requires a fusion method");
  }
}

std::string StrategyId::StrategyName() const { return bmfa::ToString(strategy); }

std::string StrategyId::FusionName() const {
  return fusion ? bmfa::ToString(*fusion) : "-";
}

std::string StrategyId::ToString() const {
  return fusion ? StrategyName() + "+" + FusionName() : StrategyName();
}

void ModelConfig::Validate() const {
  id.Validate();
  BMFA_REQUIRE(lowest_stage >= 1 && lowest_stage <= 3,
               "lowest_stage must be 1, 2 or 3");
  BMFA_REQUIRE(lowest_stage == 1 || id.strategy == Strategy::kBmfa,
               "lowest_stage applies to the bmfa strategy only");
  BMFA_REQUIRE(embedding_dim >= 1, "embedding_dim must be positive");
  BMFA_REQUIRE(reduction >= 1, "reduction ratio must be positive");
  BMFA_REQUIRE(backbone.width >= 1, "width must be positive");
  if (id.fusion == Fusion::kAfm) {
    // Channel counts double per stage, so the narrowest fused map decides.
    int narrowest = backbone.width;
    if (id.strategy == Strategy::kMfaS34) narrowest = backbone.width * 4;
    if (id.strategy == Strategy::kBmfa) {
      narrowest = backbone.width << (lowest_stage - 1);
    }
    BMFA_REQUIRE(narrowest % reduction == 0,
                 "afm: channel count " + std::to_string(narrowest) +
                     " is not a positive multiple of r=" +
                     std::to_string(reduction));
  }
}

namespace {

std::string Tag(Fusion f) {
  switch (f) {
    case Fusion::kAfm:
      return "afm";
    case Fusion::kConcat:
      return "cat";
    case Fusion::kAdd:
      return "add";
  }
  return "?";
}

template <typename T>
ConvBn<T> BuildConvBn(Rng& rng, int cout, int cin) {
  return {HeConv<T>(rng, cout, cin, 1, 1), BatchNormState<T>::Identity(cout)};
}

template <typename T>
Refine<T> BuildRefine(Rng& rng, int channels) {
  return {HeConv<T>(rng, channels, channels, 3, 3, {1, 1, 1, 1}),
          BatchNormState<T>::Identity(channels)};
}

template <typename T>
Var ConvBnForward(Tape<T>& tape, ConvBn<T>& p, Var x) {
  return nn::BatchNorm(tape, nn::Conv(tape, x, p.conv), p.bn);
}

template <typename T>
Var RefineForward(Tape<T>& tape, Refine<T>& p, Var x) {
  return nn::Relu(tape,
                  nn::BatchNorm(tape, nn::Conv(tape, x, p.conv), p.bn));
}

template <typename T>
void CollectLevel(const std::string& prefix, const char* transfer_tag,
                  int stage, PathwayLevel<T>& lvl, ParamList<T>& list) {
  const std::string s = std::to_string(stage);
  if (lvl.down) list.AddConv(prefix + ".down" + s, *lvl.down);
  lvl.transfer.Collect(prefix + "." + transfer_tag + s, list);
  lvl.lateral.Collect(prefix + ".lc" + s, list);
  lvl.fusion.Collect(prefix + "." + Tag(lvl.fusion.kind) + s, list);
}

// Top-down merge levels for stages lowest..3.
template <typename T>
std::array<std::optional<PathwayLevel<T>>, 5> BuildTopDownLevels(
    const BackboneConfig& bc, int lowest, Fusion fusion, int reduction,
    Rng& rng) {
  std::array<std::optional<PathwayLevel<T>>, 5> levels;
  for (int i = 3; i >= lowest; --i) {
    const int ci = bc.StageChannels(i);
    PathwayLevel<T> lvl;
    lvl.transfer = BuildConvBn<T>(rng, ci, bc.StageChannels(i + 1));
    lvl.lateral = BuildConvBn<T>(rng, ci, ci);
    lvl.fusion = BuildFusion<T>(fusion, ci, reduction, rng);
    levels[i] = std::move(lvl);
  }
  return levels;
}

template <typename T>
Var TopDownMerge(Tape<T>& tape, PathwayLevel<T>& lvl, Var higher,
                 Var backbone_map) {
  Var x = nn::UpsampleFreq2x(tape, ConvBnForward(tape, lvl.transfer, higher));
  Var y = ConvBnForward(tape, lvl.lateral, backbone_map);
  BMFA_REQUIRE(tape.value(x).shape() == tape.value(y).shape(),
               "top-down lateral connection shape mismatch " +
                   tape.value(x).shape().ToString() + " vs " +
                   tape.value(y).shape().ToString());
  return Fuse(tape, lvl.fusion, x, y);
}

}  // namespace

template <typename T>
void ConvBn<T>::Collect(const std::string& prefix, ParamList<T>& list) {
  list.AddConv(prefix, conv);
  list.AddBatchNorm(prefix + ".bn", bn);
}

template <typename T>
void Refine<T>::Collect(const std::string& prefix, ParamList<T>& list) {
  list.AddConv(prefix, conv);
  list.AddBatchNorm(prefix + ".bn", bn);
}

template <typename T>
void FusionParams<T>::Collect(const std::string& prefix, ParamList<T>& list) {
  if (concat_proj) concat_proj->Collect(prefix, list);
  if (afm) afm->Collect(prefix, list);
}

template <typename T>
FusionParams<T> BuildFusion(Fusion kind, int channels, int reduction,
                            Rng& rng) {
  FusionParams<T> p;
  p.kind = kind;
  if (kind == Fusion::kConcat) {
    p.concat_proj = BuildConvBn<T>(rng, channels, 2 * channels);
  } else if (kind == Fusion::kAfm) {
    p.afm = BuildAfm<T>(channels, reduction, rng);
  }
  return p;
}

template <typename T>
Var Fuse(Tape<T>& tape, FusionParams<T>& p, Var x, Var y) {
  BMFA_REQUIRE(tape.value(x).shape() == tape.value(y).shape(),
               "fusion operands differ in shape " +
                   tape.value(x).shape().ToString() + " vs " +
                   tape.value(y).shape().ToString());
  switch (p.kind) {
    case Fusion::kAdd:
      return nn::Add(tape, x, y);
    case Fusion::kConcat:
      return ConvBnForward(tape, *p.concat_proj, nn::Concat(tape, x, y));
    case Fusion::kAfm:
      return AfmFuse(tape, *p.afm, x, y);
  }
  throw InvalidInput("unknown fusion kind");
}

template <typename T>
void TopDownParams<T>::Collect(const std::string& prefix,
                               ParamList<T>& list) {
  for (int i = 3; i >= lowest_stage; --i) {
    CollectLevel(prefix, "tb", i, *levels[i], list);
  }
  refine.Collect(prefix + ".refine", list);
}

template <typename T>
void BottomUpParams<T>::Collect(const std::string& prefix,
                                ParamList<T>& list) {
  for (int i = lowest_stage + 1; i <= 4; ++i) {
    CollectLevel(prefix, "bt", i, *levels[i], list);
  }
  refine.Collect(prefix + ".refine", list);
}

template <typename T>
void HeadParams<T>::Collect(const std::string& prefix, ParamList<T>& list) {
  list.AddLinear(prefix + ".fc1", fc1);
  list.AddBatchNorm(prefix + ".bn1", bn1);
  list.AddLinear(prefix + ".fc2", fc2);
}

template <typename T>
void MfaS34Params<T>::Collect(const std::string& prefix, ParamList<T>& list) {
  project.Collect(prefix + ".proj4", list);
  fusion.Collect(prefix + "." + Tag(fusion.kind) + "3", list);
}

template <typename T>
void FpmParams<T>::Collect(const std::string& prefix, ParamList<T>& list) {
  for (int i = 3; i >= 1; --i) CollectLevel(prefix, "tb", i, *levels[i], list);
  for (int i = 1; i <= 4; ++i) {
    refine[i - 1].Collect(prefix + ".refine" + std::to_string(i), list);
  }
}

template <typename T>
TopDownParams<T> BuildTopDown(const BackboneConfig& bc, int lowest_stage,
                              Fusion fusion, int reduction, Rng& rng) {
  TopDownParams<T> p;
  p.lowest_stage = lowest_stage;
  p.levels = BuildTopDownLevels<T>(bc, lowest_stage, fusion, reduction, rng);
  p.refine = BuildRefine<T>(rng, bc.StageChannels(lowest_stage));
  return p;
}

template <typename T>
BottomUpParams<T> BuildBottomUp(const BackboneConfig& bc, int lowest_stage,
                                Fusion fusion, int reduction, Rng& rng) {
  BottomUpParams<T> p;
  p.lowest_stage = lowest_stage;
  for (int i = lowest_stage + 1; i <= 4; ++i) {
    const int lower = bc.StageChannels(i - 1);
    const int ci = bc.StageChannels(i);
    PathwayLevel<T> lvl;
    lvl.down = HeConv<T>(rng, lower, lower, 3, 3, {1, 2, 1, 1});
    lvl.transfer = BuildConvBn<T>(rng, ci, lower);
    lvl.lateral = BuildConvBn<T>(rng, ci, ci);
    lvl.fusion = BuildFusion<T>(fusion, ci, reduction, rng);
    p.levels[i] = std::move(lvl);
  }
  p.refine = BuildRefine<T>(rng, bc.StageChannels(4));
  return p;
}

template <typename T>
Var TopDownForward(Tape<T>& tape, TopDownParams<T>& p,
                   const BackboneFeatures& c, BranchTrace* trace) {
  Var f = c[3];
  if (trace) trace->maps[4] = f;
  for (int i = 3; i >= p.lowest_stage; --i) {
    f = TopDownMerge(tape, *p.levels[i], f, c[i - 1]);
    if (trace) trace->maps[i] = f;
  }
  Var refined = RefineForward(tape, p.refine, f);
  Var pooled = nn::StatsPool(tape, refined);
  if (trace) {
    trace->refined = refined;
    trace->pooled = pooled;
  }
  return pooled;
}

template <typename T>
Var BottomUpForward(Tape<T>& tape, BottomUpParams<T>& p,
                    const BackboneFeatures& c, BranchTrace* trace) {
  Var f = c[p.lowest_stage - 1];
  if (trace) trace->maps[p.lowest_stage] = f;
  for (int i = p.lowest_stage + 1; i <= 4; ++i) {
    auto& lvl = *p.levels[i];
    Var x = ConvBnForward(tape, lvl.transfer, nn::Conv(tape, f, *lvl.down));
    Var y = ConvBnForward(tape, lvl.lateral, c[i - 1]);
    BMFA_REQUIRE(tape.value(x).shape() == tape.value(y).shape(),
                 "bottom-up lateral connection shape mismatch " +
                     tape.value(x).shape().ToString() + " vs " +
                     tape.value(y).shape().ToString());
    f = Fuse(tape, lvl.fusion, x, y);
    if (trace) trace->maps[i] = f;
  }
  Var refined = RefineForward(tape, p.refine, f);
  Var pooled = nn::StatsPool(tape, refined);
  if (trace) {
    trace->refined = refined;
    trace->pooled = pooled;
  }
  return pooled;
}

template <typename T>
Var HeadForward(Tape<T>& tape, HeadParams<T>& p, Var pooled) {
  BMFA_REQUIRE(tape.value(pooled).c() == p.fc1.weight.c(),
               "head: expected input length " +
                   std::to_string(p.fc1.weight.c()) + ", got " +
                   std::to_string(tape.value(pooled).c()));
  Var h = nn::Linear(tape, pooled, p.fc1);
  h = nn::Relu(tape, nn::BatchNorm(tape, h, p.bn1));
  return nn::Linear(tape, h, p.fc2);
}

template <typename T>
Var Embed(Tape<T>& tape, HeadParams<T>& p, Var h_tb, Var h_bt) {
  BMFA_REQUIRE(tape.value(h_tb).shape() == tape.value(h_bt).shape(),
               "embed: branch embeddings differ in length");
  return HeadForward(tape, p, nn::Concat(tape, h_tb, h_bt));
}

template <typename T>
SpeakerNet<T> SpeakerNet<T>::Build(const ModelConfig& config, uint64_t seed) {
  config.Validate();
  SpeakerNet net;
  net.config_ = config;
  Rng rng(seed);
  const BackboneConfig& bc = config.backbone;
  net.backbone = BuildBackbone<T>(bc, rng);
  const int r = config.reduction;
  switch (config.id.strategy) {
    case Strategy::kBaseline:
      break;
    case Strategy::kMfaS34: {
      MfaS34Params<T> m;
      m.project = BuildConvBn<T>(rng, bc.StageChannels(3),
                                 bc.StageChannels(4));
      m.fusion = BuildFusion<T>(*config.id.fusion, bc.StageChannels(3), r,
                                rng);
      net.mfa = std::move(m);
      break;
    }
    case Strategy::kMeaFpm: {
      FpmParams<T> f;
      f.levels = BuildTopDownLevels<T>(bc, 1, *config.id.fusion, r, rng);
      for (int i = 1; i <= 4; ++i) {
        f.refine[i - 1] = BuildRefine<T>(rng, bc.StageChannels(i));
      }
      net.fpm = std::move(f);
      break;
    }
    case Strategy::kBmfa:
      net.top_down = BuildTopDown<T>(bc, config.lowest_stage,
                                     *config.id.fusion, r, rng);
      net.bottom_up = BuildBottomUp<T>(bc, config.lowest_stage,
                                       *config.id.fusion, r, rng);
      break;
  }
  const int e = config.embedding_dim;
  net.head.fc1 = HeLinear<T>(rng, e, net.HeadInputDim(), false);
  net.head.bn1 = BatchNormState<T>::Identity(e);
  net.head.fc2 = HeLinear<T>(rng, e, e, true);
  return net;
}

template <typename T>
int SpeakerNet<T>::HeadInputDim() const {
  const BackboneConfig& bc = config_.backbone;
  auto pooled = [&bc](int stage) {
    return 2 * bc.StageChannels(stage) * bc.StageFreq(stage);
  };
  switch (config_.id.strategy) {
    case Strategy::kBaseline:
      return pooled(4);
    case Strategy::kMfaS34:
      return pooled(3);
    case Strategy::kMeaFpm:
      return pooled(1) + pooled(2) + pooled(3) + pooled(4);
    case Strategy::kBmfa:
      return pooled(config_.lowest_stage) + pooled(4);
  }
  return 0;
}

template <typename T>
Var SpeakerNet<T>::Forward(Tape<T>& tape, Var x, ForwardTrace* trace) {
  BackboneFeatures c = BackboneForward(tape, backbone, x);
  if (trace) trace->backbone = c;
  Var head_in;
  switch (config_.id.strategy) {
    case Strategy::kBaseline:
      head_in = nn::StatsPool(tape, c[3]);
      break;
    case Strategy::kMfaS34: {
      Var up = nn::UpsampleFreq2x(tape, ConvBnForward(tape, mfa->project,
                                                      c[3]));
      head_in = nn::StatsPool(tape, Fuse(tape, mfa->fusion, up, c[2]));
      break;
    }
    case Strategy::kMeaFpm: {
      std::array<Var, 5> p;
      p[4] = c[3];
      for (int i = 3; i >= 1; --i) {
        p[i] = TopDownMerge(tape, *fpm->levels[i], p[i + 1], c[i - 1]);
      }
      if (trace) trace->top_down.maps = p;
      head_in = nn::StatsPool(tape, RefineForward(tape, fpm->refine[0], p[1]));
      for (int i = 2; i <= 4; ++i) {
        Var pooled =
            nn::StatsPool(tape, RefineForward(tape, fpm->refine[i - 1], p[i]));
        head_in = nn::Concat(tape, head_in, pooled);
      }
      break;
    }
    case Strategy::kBmfa: {
      Var h_tb = TopDownForward(tape, *top_down, c,
                                trace ? &trace->top_down : nullptr);
      Var h_bt = BottomUpForward(tape, *bottom_up, c,
                                 trace ? &trace->bottom_up : nullptr);
      head_in = nn::Concat(tape, h_tb, h_bt);
      break;
    }
  }
  Var emb = HeadForward(tape, head, head_in);
  if (trace) {
    trace->head_input = head_in;
    trace->embedding = emb;
  }
  return emb;
}

template <typename T>
Tensor<T> SpeakerNet<T>::Embed(const Tensor<T>& x) {
  Tape<T> tape;
  return tape.value(Forward(tape, tape.Input(x)));
}

template <typename T>
ParamList<T> SpeakerNet<T>::Params() {
  ParamList<T> list;
  backbone.Collect("backbone", list);
  if (top_down) top_down->Collect("topdown", list);
  if (bottom_up) bottom_up->Collect("bottomup", list);
  if (mfa) mfa->Collect("mfa", list);
  if (fpm) fpm->Collect("fpm", list);
  head.Collect("head", list);
  return list;
}

template <typename T>
void SpeakerNet<T>::SetMode(BnMode mode) {
  Params().SetMode(mode);
}

#define BMFA_INSTANTIATE_AGGREGATION(T)                                      \
  template struct ConvBn<T>;                                                 \
  template struct Refine<T>;                                                 \
  template struct FusionParams<T>;                                           \
  template struct TopDownParams<T>;                                          \
  template struct BottomUpParams<T>;                                         \
  template struct HeadParams<T>;                                             \
  template struct MfaS34Params<T>;                                           \
  template struct FpmParams<T>;                                              \
  template class SpeakerNet<T>;                                              \
  template FusionParams<T> BuildFusion(Fusion, int, int, Rng&);              \
  template Var Fuse(Tape<T>&, FusionParams<T>&, Var, Var);                   \
  template TopDownParams<T> BuildTopDown(const BackboneConfig&, int, Fusion,  \
                                         int, Rng&);                         \
  template BottomUpParams<T> BuildBottomUp(const BackboneConfig&, int,       \
                                           Fusion, int, Rng&);               \
  template Var TopDownForward(Tape<T>&, TopDownParams<T>&,                   \
                              const BackboneFeatures&, BranchTrace*);        \
  template Var BottomUpForward(Tape<T>&, BottomUpParams<T>&,                 \
                               const BackboneFeatures&, BranchTrace*);       \
  template Var HeadForward(Tape<T>&, HeadParams<T>&, Var);                   \
  template Var Embed(Tape<T>&, HeadParams<T>&, Var, Var);

BMFA_INSTANTIATE_AGGREGATION(float)
BMFA_INSTANTIATE_AGGREGATION(double)

#undef BMFA_INSTANTIATE_AGGREGATION

}  // namespace bmfa
