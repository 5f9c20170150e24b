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

#include <random>

#include <gtest/gtest.h>

#include "bmfa/afm.h"
#include "bmfa/aggregation.h"
#include "bmfa/backbone.h"
#include "bmfa/checkpoint.h"
#include "bmfa/gradcheck.h"
#include "bmfa/graph.h"

namespace bmfa {
namespace {

// Frozen from tests/oracles/param_count.py.
constexpr size_t kBackboneParams = 5325728;
constexpr size_t kBaselineParams = 6637984;
constexpr size_t kBmfaAfmParams = 8758256;

template <typename T>
Tensor<T> Normal(Rng& rng, Shape s) {
  Tensor<T> t(s);
  FillNormal(rng, t, 1.0);
  return t;
}

size_t Trainable(const ParamList<float>& list, const std::string& prefix) {
  size_t total = 0;
  for (const auto& r : list.refs()) {
    if (r.trainable && r.name.rfind(prefix, 0) == 0) total += r.tensor->size();
  }
  return total;
}

ModelConfig Model(const std::string& strategy, const std::string& fusion,
                  int width = 32, std::array<int, 4> blocks = {3, 4, 6, 3}) {
  ModelConfig m;
  m.id = StrategyId::Parse(strategy, fusion);
  m.backbone.width = width;
  m.backbone.blocks = blocks;
  return m;
}

// Zeroes every AFM W2 and resets bn2 to the identity.
void ZeroAfmW2(ParamList<float>& list) {
  for (const auto& r : list.refs()) {
    const std::string& n = r.name;
    if (n.find(".W2.weight") != std::string::npos) r.tensor->Fill(0);
  }
  for (const auto& r : list.refs()) {
    const std::string& n = r.name;
    if (n.find(".bn2.") == std::string::npos) continue;
    if (n.ends_with("gamma") || n.ends_with("running_var")) r.tensor->Fill(1);
    if (n.ends_with("beta") || n.ends_with("running_mean")) r.tensor->Fill(0);
  }
}

TEST(BackboneTest, LayoutMatchesResNet34) {
  const BackboneParams<float> p = BuildBackbone<float>(BackboneConfig{}, 1);
  const int blocks[4] = {3, 4, 6, 3};
  const int channels[4] = {32, 64, 128, 256};
  EXPECT_EQ(p.conv0.weight.shape(), (Shape{32, 1, 7, 7}));
  for (int s = 0; s < 4; ++s) {
    ASSERT_EQ(p.stages[s].size(), size_t(blocks[s]));
    for (size_t b = 0; b < p.stages[s].size(); ++b) {
      EXPECT_EQ(p.stages[s][b].conv2.weight.n(), channels[s]);
      EXPECT_EQ(p.stages[s][b].proj.has_value(), b == 0);
    }
  }
  EXPECT_EQ(p.stages[0][0].conv1.geometry.stride_t, 2);
  EXPECT_EQ(p.stages[0][0].conv1.geometry.stride_f, 2);
  for (int s = 1; s < 4; ++s) {
    EXPECT_EQ(p.stages[s][0].conv1.geometry.stride_t, 1);
    EXPECT_EQ(p.stages[s][0].conv1.geometry.stride_f, 2);
  }
}

TEST(BackboneTest, ParameterCountsMatchIndependentOracle) {
  auto baseline = SpeakerNet<float>::Build(Model("baseline", "none"), 1);
  EXPECT_EQ(Trainable(baseline.Params(), "backbone."), kBackboneParams);
  EXPECT_EQ(baseline.Params().TrainableCount(), kBaselineParams);
  auto bmfa = SpeakerNet<float>::Build(Model("bmfa", "afm"), 1);
  EXPECT_EQ(bmfa.Params().TrainableCount(), kBmfaAfmParams);
}

TEST(BackboneTest, SameSeedSameParameters) {
  auto a = BuildBackbone<float>(BackboneConfig{}, 5);
  auto b = BuildBackbone<float>(BackboneConfig{}, 5);
  ParamList<float> la, lb;
  a.Collect("backbone", la);
  b.Collect("backbone", lb);
  ASSERT_EQ(la.refs().size(), lb.refs().size());
  for (size_t i = 0; i < la.refs().size(); ++i) {
    EXPECT_EQ(la.refs()[i].name, lb.refs()[i].name);
    EXPECT_EQ(*la.refs()[i].tensor, *lb.refs()[i].tensor);
  }
  auto c = BuildBackbone<float>(BackboneConfig{}, 6);
  EXPECT_FALSE(c.conv0.weight == a.conv0.weight);
}

TEST(BackboneTest, StageShapesForEveryEvenLength) {
  BackboneConfig bc;
  bc.width = 2;
  bc.blocks = {1, 1, 1, 1};
  auto p = BuildBackbone<float>(bc, 2);
  ParamList<float> list;
  p.Collect("backbone", list);
  list.SetMode(BnMode::kInfer);
  Rng rng(1);
  for (int t = 2; t <= 400; t += 2) {
    Tape<float> tape;
    BackboneFeatures c =
        BackboneForward(tape, p, tape.Input(Normal<float>(rng, {1, 1, t, 64})));
    for (int s = 0; s < 4; ++s) {
      ASSERT_EQ(tape.value(c[s]).shape(),
                (Shape{1, 2 << s, t / 2, 32 >> s}))
          << "T=" << t << " stage " << s + 1;
    }
  }
}

TEST(BackboneTest, RejectsBadInputs) {
  BackboneConfig bc;
  bc.width = 2;
  bc.blocks = {1, 1, 1, 1};
  auto p = BuildBackbone<float>(bc, 2);
  for (Shape s : {Shape{1, 1, 8, 40}, Shape{1, 1, 7, 64}, Shape{1, 2, 8, 64}}) {
    Tape<float> tape;
    EXPECT_THROW(BackboneForward(tape, p, tape.Input(Tensor<float>(s))),
                 InvalidInput)
        << s.ToString();
  }
}

TEST(BackboneTest, ZeroInputGivesZeroFeatures) {
  BackboneConfig bc;
  bc.width = 4;
  bc.blocks = {1, 1, 1, 1};
  auto p = BuildBackbone<float>(bc, 3);
  ParamList<float> list;
  p.Collect("backbone", list);
  list.SetMode(BnMode::kInfer);
  Tape<float> tape;
  BackboneFeatures c =
      BackboneForward(tape, p, tape.Input(Tensor<float>({2, 1, 16, 64})));
  for (Var v : c) {
    const Tensor<float>& t = tape.value(v);
    for (size_t i = 0; i < t.size(); ++i) ASSERT_EQ(t[i], 0.0f);
  }
}

TEST(BackboneTest, IdentityBlockWithZeroGammaIsRelu) {
  Rng rng(4);
  BasicBlockParams<float> b =
      BuildBasicBlock<float>(rng, 8, 8, ConvGeometry{});
  ASSERT_FALSE(b.proj.has_value());
  b.bn2.gamma.Fill(0);
  Tensor<float> x = Normal<float>(rng, {2, 8, 6, 6});
  for (size_t i = 0; i < x.size(); ++i) x[i] = std::abs(x[i]);
  Tape<float> tape;
  EXPECT_EQ(tape.value(BasicBlockForward(tape, b, tape.Input(x))), x);
}

TEST(BackboneTest, BlockGradientPasses) {
  EXPECT_TRUE(GradCheck("basic_block", 7).pass);
  EXPECT_TRUE(GradCheck("basic_block_identity", 7).pass);
}

TEST(AfmTest, RejectsInvalidConstruction) {
  Rng rng(1);
  EXPECT_THROW(BuildAfm<float>(6, 4, rng), InvalidInput);
  EXPECT_THROW(BuildAfm<float>(2, 4, rng), InvalidInput);
  AfmParams<float> p = BuildAfm<float>(8, 4, rng);
  EXPECT_EQ(p.w1.weight.shape(), (Shape{2, 16, 1, 1}));
  EXPECT_EQ(p.w2.weight.shape(), (Shape{8, 2, 1, 1}));
  EXPECT_THROW(AfmFuse(p, Tensor<float>({1, 8, 2, 2}),
                       Tensor<float>({1, 8, 2, 3})),
               InvalidInput);
  EXPECT_THROW(AfmFuse(p, Tensor<float>({1, 4, 2, 2}),
                       Tensor<float>({1, 4, 2, 2})),
               InvalidInput);
}

TEST(AfmTest, ZeroW2GivesZeroMapAndPlainSum) {
  Rng rng(2);
  AfmParams<float> p = BuildAfm<float>(8, 4, rng);
  p.w2.weight.Fill(0);
  p.bn1.mode = BnMode::kInfer;
  p.bn2.mode = BnMode::kInfer;
  const Tensor<float> x = Normal<float>(rng, {2, 8, 5, 4});
  const Tensor<float> y = Normal<float>(rng, {2, 8, 5, 4});
  const Tensor<float> s = AttentionMap(p, x, y);
  for (size_t i = 0; i < s.size(); ++i) ASSERT_EQ(s[i], 0.0f);
  EXPECT_EQ(AfmFuse(p, x, y), Add(x, y));
}

TEST(AfmTest, MapBoundedAndMatchesKernelComposition) {
  Rng rng(3);
  AfmParams<double> p = BuildAfm<double>(8, 4, rng);
  FillNormal(rng, p.bn2.gamma, 3.0);
  const Tensor<double> x = Normal<double>(rng, {2, 8, 3, 4});
  const Tensor<double> y = Normal<double>(rng, {2, 8, 3, 4});
  AfmParams<double> q = p;
  const Tensor<double> s = AttentionMap(p, x, y);
  for (size_t i = 0; i < s.size(); ++i) ASSERT_LT(std::abs(s[i]), 1.0);

  Tensor<double> h = Conv2d(ConcatChannels(x, y), q.w1);
  h = Relu(BatchNorm(h, q.bn1));
  const Tensor<double> ref = Tanh(BatchNorm(Conv2d(h, q.w2), q.bn2));
  EXPECT_EQ(s, ref);
  const Tensor<double> fused =
      Add(Mul(AddScalar(1.0, ref), x), Mul(ScalarSub(1.0, ref), y));
  EXPECT_EQ(AfmFuse(q, x, y), fused);
}

TEST(AfmTest, WeightsComplementaryAndOrdered) {
  Rng rng(4);
  AfmParams<double> p = BuildAfm<double>(4, 4, rng);
  const Tensor<double> x = Normal<double>(rng, {2, 4, 3, 3});
  const Tensor<double> y = Normal<double>(rng, {2, 4, 3, 3});
  const Tensor<double> s = AttentionMap(p, x, y);
  const Tensor<double> wx = AddScalar(1.0, s);
  const Tensor<double> wy = ScalarSub(1.0, s);
  for (size_t i = 0; i < s.size(); ++i) ASSERT_EQ(wx[i] + wy[i], 2.0);

  const Tensor<double> xy = AfmFuse(p, x, y);
  const Tensor<double> yx = AfmFuse(p, y, x);
  EXPECT_FALSE(xy == yx);
  EXPECT_EQ(xy.shape(), x.shape());

  const Tensor<double> same = AfmFuse(p, x, x);
  for (size_t i = 0; i < same.size(); ++i) {
    EXPECT_NEAR(same[i], 2 * x[i], 1e-15 * std::max(1.0, std::abs(x[i])));
  }
}

TEST(AfmTest, GradientPasses) {
  const GradCheckReport r = GradCheck("afm", 7);
  EXPECT_TRUE(r.pass) << r.max_rel_error;
}

TEST(StrategyTest, ParseAndValidate) {
  EXPECT_EQ(StrategyId::Parse("baseline", "").ToString(), "baseline");
  EXPECT_EQ(StrategyId::Parse("bmfa", "afm").fusion, Fusion::kAfm);
  EXPECT_THROW(StrategyId::Parse("baseline", "afm"), InvalidInput);
  EXPECT_THROW(StrategyId::Parse("bmfa", "none"), InvalidInput);
  EXPECT_THROW(StrategyId::Parse("fpn", "add"), InvalidInput);
  EXPECT_THROW(StrategyId::Parse("bmfa", "max"), InvalidInput);
}

class ShapeTraceTest : public ::testing::TestWithParam<int> {};

TEST_P(ShapeTraceTest, FullSizeShapes) {
  const int t = GetParam();
  auto net = SpeakerNet<float>::Build(Model("bmfa", "afm"), 1);
  net.SetMode(BnMode::kInfer);
  Rng rng(t);
  Tape<float> tape;
  ForwardTrace trace;
  net.Forward(tape, tape.Input(Normal<float>(rng, {1, 1, t, 64})), &trace);
  const int h = t / 2;
  const Shape c[4] = {{1, 32, h, 32}, {1, 64, h, 16}, {1, 128, h, 8},
                      {1, 256, h, 4}};
  for (int s = 0; s < 4; ++s) {
    EXPECT_EQ(tape.value(trace.backbone[s]).shape(), c[s]) << "C" << s + 1;
  }
  for (int s = 1; s <= 4; ++s) {
    EXPECT_EQ(tape.value(trace.top_down.maps[s]).shape(), c[s - 1]) << s;
    EXPECT_EQ(tape.value(trace.bottom_up.maps[s]).shape(), c[s - 1]) << s;
  }
  EXPECT_EQ(tape.value(trace.top_down.maps[4]), tape.value(trace.backbone[3]));
  EXPECT_EQ(tape.value(trace.bottom_up.maps[1]),
            tape.value(trace.backbone[0]));
  EXPECT_EQ(tape.value(trace.top_down.pooled).shape(),
            (Shape{1, 2048, 1, 1}));
  EXPECT_EQ(tape.value(trace.bottom_up.pooled).shape(),
            (Shape{1, 2048, 1, 1}));
  EXPECT_EQ(tape.value(trace.head_input).shape(), (Shape{1, 4096, 1, 1}));
  EXPECT_EQ(tape.value(trace.embedding).shape(), (Shape{1, 512, 1, 1}));
}

INSTANTIATE_TEST_SUITE_P(Lengths, ShapeTraceTest,
                         ::testing::Values(200, 256, 400));

TEST(AggregationTest, DownsampleHalvesFrequencyOnly) {
  auto net = SpeakerNet<float>::Build(Model("bmfa", "afm"), 1);
  Rng rng(1);
  const Tensor<float> x = Normal<float>(rng, {1, 32, 100, 32});
  EXPECT_EQ(Conv2d(x, *net.bottom_up->levels[2]->down).shape(),
            (Shape{1, 32, 100, 16}));
}

TEST(AggregationTest, EveryStrategyEmbedsTo512) {
  Rng rng(2);
  const Tensor<float> x = Normal<float>(rng, {2, 1, 16, 64});
  for (const auto& [s, f] : std::vector<std::pair<std::string, std::string>>{
           {"baseline", "none"}, {"mfa_s34", "concat"}, {"mfa_s34", "afm"},
           {"mfa_s34", "add"}, {"mea_fpm", "add"}, {"mea_fpm", "afm"},
           {"bmfa", "concat"}, {"bmfa", "add"}, {"bmfa", "afm"}}) {
    auto net = SpeakerNet<float>::Build(Model(s, f, 4, {1, 1, 1, 1}), 3);
    net.SetMode(BnMode::kInfer);
    EXPECT_EQ(net.Embed(x).shape(), (Shape{2, 512, 1, 1})) << s << "+" << f;
  }
}

TEST(AggregationTest, FpmConcatenatesFourStageEmbeddings) {
  auto net = SpeakerNet<float>::Build(Model("mea_fpm", "add"), 1);
  EXPECT_EQ(net.HeadInputDim(), 4 * 2048);
  Rng rng(3);
  Tape<float> tape;
  ForwardTrace trace;
  net.SetMode(BnMode::kInfer);
  net.Forward(tape, tape.Input(Normal<float>(rng, {1, 1, 8, 64})), &trace);
  EXPECT_EQ(tape.value(trace.head_input).shape(), (Shape{1, 8192, 1, 1}));
}

TEST(AggregationTest, BmfaAfmWithZeroW2EqualsBmfaAdd) {
  const ModelConfig afm_cfg = Model("bmfa", "afm", 8, {1, 1, 1, 1});
  const ModelConfig add_cfg = Model("bmfa", "add", 8, {1, 1, 1, 1});
  auto afm = SpeakerNet<float>::Build(afm_cfg, 9);
  auto add = SpeakerNet<float>::Build(add_cfg, 10);
  ParamList<float> afm_list = afm.Params();
  ZeroAfmW2(afm_list);
  std::vector<std::string> afm_only;
  for (const auto& r : afm_list.refs()) {
    if (r.name.find(".afm") != std::string::npos) afm_only.push_back(r.name);
  }
  Restore(Snapshot(afm_list), add.Params(), afm_only);
  afm.SetMode(BnMode::kInfer);
  add.SetMode(BnMode::kInfer);
  Rng rng(5);
  const Tensor<float> x = Normal<float>(rng, {3, 1, 12, 64});
  EXPECT_EQ(afm.Embed(x), add.Embed(x));
}

TEST(AggregationTest, TopDownAdditiveMatchesDirectReference) {
  auto net = SpeakerNet<double>::Build(
      [] {
        ModelConfig m = Model("bmfa", "afm", 4, {1, 1, 1, 1});
        return m;
      }(),
      11);
  ParamList<double> list = net.Params();
  for (const auto& r : list.refs()) {
    if (r.name.find(".W2.weight") != std::string::npos) r.tensor->Fill(0);
  }
  net.SetMode(BnMode::kInfer);
  Rng rng(6);
  // Random running statistics so the BN layers are not identities.
  for (auto* bn : list.batch_norms()) {
    if (bn->running_mean.size() == 0) continue;
    for (size_t i = 0; i < bn->running_mean.size(); ++i) {
      bn->running_mean[i] = 0.1 * (double(rng() % 11) - 5);
      bn->running_var[i] = 0.5 + 0.1 * double(rng() % 10);
    }
  }
  for (const auto& r : list.refs()) {
    if (r.name.find(".afm") != std::string::npos &&
        r.name.find(".bn2.") != std::string::npos) {
      if (r.name.ends_with("running_mean") || r.name.ends_with("beta")) {
        r.tensor->Fill(0);
      }
    }
  }
  const Tensor<double> x = Normal<double>(rng, {2, 1, 10, 64});
  Tape<double> tape;
  ForwardTrace trace;
  net.Forward(tape, tape.Input(x), &trace);

  std::array<Tensor<double>, 4> c;
  for (int s = 0; s < 4; ++s) c[s] = tape.value(trace.backbone[s]);
  TopDownParams<double>& td = *net.top_down;
  Tensor<double> f = c[3];
  for (int i = 3; i >= 1; --i) {
    PathwayLevel<double>& lvl = *td.levels[i];
    Tensor<double> up = UpsampleFreq2x(
        BatchNorm(Conv2d(f, lvl.transfer.conv), lvl.transfer.bn));
    Tensor<double> lat = BatchNorm(Conv2d(c[i - 1], lvl.lateral.conv),
                                   lvl.lateral.bn);
    f = Add(up, lat);
  }
  const Tensor<double> ref =
      StatsPool(Relu(BatchNorm(Conv2d(f, td.refine.conv), td.refine.bn)));
  const Tensor<double>& got = tape.value(trace.top_down.pooled);
  ASSERT_EQ(got.shape(), ref.shape());
  for (size_t i = 0; i < ref.size(); ++i) {
    EXPECT_NEAR(got[i], ref[i], 1e-12 * std::max(1.0, std::abs(ref[i])));
  }
}

TEST(AggregationTest, ZeroHeadInputGivesZeroEmbedding) {
  auto net = SpeakerNet<float>::Build(Model("bmfa", "afm", 4, {1, 1, 1, 1}), 1);
  net.SetMode(BnMode::kInfer);
  Tape<float> tape;
  Var e = HeadForward(tape, net.head,
                      tape.Input(Tensor<float>({2, net.HeadInputDim(), 1, 1})));
  const Tensor<float>& emb = tape.value(e);
  EXPECT_EQ(emb.shape(), (Shape{2, 512, 1, 1}));
  for (size_t i = 0; i < emb.size(); ++i) ASSERT_EQ(emb[i], 0.0f);
}

TEST(AggregationTest, BatchPermutationPermutesEmbeddings) {
  auto net = SpeakerNet<float>::Build(Model("bmfa", "afm", 4, {1, 1, 1, 1}), 4);
  net.SetMode(BnMode::kInfer);
  Rng rng(7);
  const Tensor<float> x = Normal<float>(rng, {3, 1, 8, 64});
  Tensor<float> swapped = x;
  const size_t per = x.size() / 3;
  std::copy_n(x.data(), per, swapped.data() + 2 * per);
  std::copy_n(x.data() + 2 * per, per, swapped.data());
  const Tensor<float> a = net.Embed(x);
  const Tensor<float> b = net.Embed(swapped);
  for (int d = 0; d < 512; ++d) {
    EXPECT_EQ(a.at(0, d, 0, 0), b.at(2, d, 0, 0));
    EXPECT_EQ(a.at(1, d, 0, 0), b.at(1, d, 0, 0));
    EXPECT_EQ(a.at(2, d, 0, 0), b.at(0, d, 0, 0));
  }
}

TEST(AggregationTest, RepeatingTimeKeepsPooledStatistics) {
  Rng rng(8);
  Tensor<double> x({1, 3, 1, 4});
  FillNormal(rng, x, 1.0);
  Tensor<double> a({1, 3, 5, 4}), b({1, 3, 10, 4});
  for (int c = 0; c < 3; ++c) {
    for (int t = 0; t < 10; ++t) {
      for (int f = 0; f < 4; ++f) {
        if (t < 5) a.at(0, c, t, f) = x.at(0, c, 0, f);
        b.at(0, c, t, f) = x.at(0, c, 0, f);
      }
    }
  }
  const Tensor<double> pa = StatsPool(a);
  const Tensor<double> pb = StatsPool(b);
  ASSERT_EQ(pa.shape(), pb.shape());
  for (size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(pa[i], pb[i], 1e-12);
}

TEST(AggregationTest, NetworkGradientsPass) {
  for (const std::string op :
       {"tiny_network", "tiny_network_baseline", "tiny_network_mea_fpm_add"}) {
    const GradCheckReport r = GradCheck(op, 7);
    EXPECT_TRUE(r.pass) << op << " " << r.max_rel_error;
  }
}

}  // namespace
}  // namespace bmfa
