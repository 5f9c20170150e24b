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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "bmfa/gradcheck.h"
#include "bmfa/kernels.h"
#include "bmfa/params.h"
#include "bmfa/tensor.h"

namespace bmfa {
namespace {

template <typename T>
Tensor<T> Uniform(Rng& rng, Shape s, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(s);
  for (size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(u(rng));
  return t;
}

// Quadruple-loop direct summation in double.
template <typename T>
Tensor<double> DirectConv(const Tensor<T>& x, const ConvParams<T>& p) {
  const Tensor<T>& w = p.weight;
  const ConvGeometry& g = p.geometry;
  const int out_t = (x.t() + 2 * g.pad_t - w.t()) / g.stride_t + 1;
  const int out_f = (x.f() + 2 * g.pad_f - w.f()) / g.stride_f + 1;
  Tensor<double> y({x.n(), w.n(), out_t, out_f});
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < w.n(); ++o) {
      for (int t = 0; t < out_t; ++t) {
        for (int f = 0; f < out_f; ++f) {
          double sum = p.bias ? (*p.bias)[o] : 0.0;
          for (int c = 0; c < x.c(); ++c) {
            for (int i = 0; i < w.t(); ++i) {
              for (int j = 0; j < w.f(); ++j) {
                const int st = t * g.stride_t - g.pad_t + i;
                const int sf = f * g.stride_f - g.pad_f + j;
                if (st < 0 || st >= x.t() || sf < 0 || sf >= x.f()) continue;
                sum += double(x.at(n, c, st, sf)) * w.at(o, c, i, j);
              }
            }
          }
          y.at(n, o, t, f) = sum;
        }
      }
    }
  }
  return y;
}

TEST(TensorTest, ShapeAndIndexing) {
  Tensor<float> t({2, 3, 4, 5}, 1.5f);
  EXPECT_EQ(t.size(), 120u);
  t.at(1, 2, 3, 4) = 7;
  EXPECT_EQ(t[119], 7);
  EXPECT_THROW(Tensor<float>({0, 1, 1, 1}), InvalidInput);
  EXPECT_THROW(Tensor<float>({1, 1, 1, 2}, std::vector<float>{1}),
               InvalidInput);
}

TEST(TensorTest, BtfRoundTripBothPrecisions) {
  Rng rng(3);
  const Tensor<double> d = Uniform<double>(rng, {2, 3, 4, 5});
  std::stringstream ss;
  WriteTensor(ss, d);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 8), "BTENSOR1");
  EXPECT_EQ(bytes.size(), 8u + 4 + 16 + 1 + 120 * 8);
  EXPECT_EQ(static_cast<uint8_t>(bytes[28]), 1);
  EXPECT_EQ(ReadTensor<double>(ss), d);

  const Tensor<float> f = d.Cast<float>();
  std::stringstream fs;
  WriteTensor(fs, f);
  EXPECT_EQ(static_cast<uint8_t>(fs.str()[28]), 0);
  EXPECT_EQ(ReadTensor<float>(fs), f);
}

TEST(TensorTest, BtfRejectsCorruptInput) {
  Tensor<float> t({1, 1, 2, 2}, 1.0f);
  std::stringstream ss;
  WriteTensor(ss, t);
  const std::string good = ss.str();

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  std::stringstream a(bad_magic);
  EXPECT_THROW(ReadTensor<float>(a), FormatError);

  std::string bad_rank = good;
  bad_rank[8] = 5;
  std::stringstream b(bad_rank);
  EXPECT_THROW(ReadTensor<float>(b), FormatError);

  std::string bad_precision = good;
  bad_precision[28] = 7;
  std::stringstream c(bad_precision);
  EXPECT_THROW(ReadTensor<float>(c), FormatError);

  std::stringstream d(good.substr(0, good.size() - 1));
  EXPECT_THROW(ReadTensor<float>(d), FormatError);

  EXPECT_THROW(LoadTensor<float>("/nonexistent/x.btf"), FormatError);
}

TEST(ConvTest, OneByOneIdentityKernel) {
  Rng rng(1);
  const Tensor<float> x = Uniform<float>(rng, {2, 3, 5, 4});
  ConvParams<float> p;
  p.weight = Tensor<float>({3, 3, 1, 1});
  for (int c = 0; c < 3; ++c) p.weight.at(c, c, 0, 0) = 1;
  EXPECT_EQ(Conv2d(x, p), x);
}

TEST(ConvTest, AllOnesWindowSum) {
  ConvParams<float> p;
  p.weight = Tensor<float>({1, 1, 3, 3}, 1.0f);
  const Tensor<float> y = Conv2d(Tensor<float>({1, 1, 3, 3}, 1.0f), p);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y[0], 9.0f);
}

TEST(ConvTest, OutputShapeFormula) {
  EXPECT_EQ(ConvOutputShape({2, 3, 9, 8}, {4, 3, 3, 3}, {2, 2, 1, 1}),
            (Shape{2, 4, 5, 4}));
  EXPECT_EQ(ConvOutputShape({1, 1, 200, 64}, {32, 1, 7, 7}, {1, 1, 3, 3}),
            (Shape{1, 32, 200, 64}));
}

TEST(ConvTest, RejectsShapeMismatch) {
  ConvParams<float> p;
  p.weight = Tensor<float>({2, 3, 3, 3});
  EXPECT_THROW(Conv2d(Tensor<float>({1, 2, 5, 5}), p), InvalidInput);
  EXPECT_THROW(Conv2d(Tensor<float>({1, 3, 2, 5}), p), InvalidInput);
}

TEST(ConvTest, FixedCaseMatchesDirectOracle) {
  Rng rng(11);
  const Tensor<float> x = Uniform<float>(rng, {2, 3, 8, 8});
  ConvParams<float> p;
  p.weight = Uniform<float>(rng, {4, 3, 3, 3});
  p.geometry = {1, 1, 1, 1};
  const Tensor<float> y = Conv2d(x, p);
  const Tensor<double> ref = DirectConv(x, p);
  ASSERT_EQ(y.shape(), ref.shape());
  for (size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-6);
}

TEST(ConvTest, RandomCasesMatchDirectOracle) {
  Rng rng(2024);
  auto pick = [&](int lo, int hi) {
    return lo + static_cast<int>(rng() % uint64_t(hi - lo + 1));
  };
  int cases = 0;
  double worst = 0;
  while (cases < 200) {
    const int kt = 2 * pick(0, 3) + 1;
    const int kf = 2 * pick(0, 3) + 1;
    ConvGeometry g{pick(1, 2), pick(1, 2), pick(0, kt / 2), pick(0, kf / 2)};
    const Shape xs{pick(1, 3), pick(1, 8), pick(1, 8), pick(1, 8)};
    if (xs.t + 2 * g.pad_t < kt || xs.f + 2 * g.pad_f < kf) continue;
    const Tensor<double> x = Uniform<double>(rng, xs);
    ConvParams<double> p;
    p.weight = Uniform<double>(rng, {pick(1, 8), xs.c, kt, kf});
    p.geometry = g;
    if (rng() % 2) p.bias = Uniform<double>(rng, {1, p.weight.n(), 1, 1});
    const Tensor<double> y = Conv2d(x, p);
    const Tensor<double> ref = DirectConv(x, p);
    ASSERT_EQ(y.shape(), ref.shape()) << "case " << cases;
    for (size_t i = 0; i < y.size(); ++i) {
      worst = std::max(worst, std::abs(y[i] - ref[i]));
    }
    ++cases;
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(ConvTest, BackwardLinearityAndIdentity) {
  Rng rng(5);
  const Tensor<float> x = Uniform<float>(rng, {2, 2, 4, 4});
  ConvParams<float> p;
  p.weight = Uniform<float>(rng, {3, 2, 3, 3});
  p.bias = Tensor<float>({1, 3, 1, 1});
  p.geometry = {1, 1, 1, 1};
  const ConvGrads<float> zero =
      Conv2dBackward(x, p, Tensor<float>({2, 3, 4, 4}));
  for (const Tensor<float>* g : {&zero.x, &zero.weight, &zero.bias}) {
    for (size_t i = 0; i < g->size(); ++i) EXPECT_EQ((*g)[i], 0.0f);
  }

  ConvParams<float> id;
  id.weight = Tensor<float>({1, 1, 1, 1}, 1.0f);
  const Tensor<float> x1 = Uniform<float>(rng, {1, 1, 3, 5});
  const Tensor<float> up = Uniform<float>(rng, {1, 1, 3, 5});
  EXPECT_EQ(Conv2dBackward(x1, id, up).x, up);
}

TEST(BatchNormTest, InferIdentityAndAffineExample) {
  Rng rng(2);
  BatchNormState<double> s = BatchNormState<double>::Identity(2);
  s.mode = BnMode::kInfer;
  s.eps = 0;
  const Tensor<double> x = Uniform<double>(rng, {2, 2, 3, 3});
  EXPECT_EQ(BatchNorm(x, s), x);

  BatchNormState<double> one = BatchNormState<double>::Identity(1);
  one.mode = BnMode::kInfer;
  one.eps = 0;
  one.running_mean[0] = 2;
  const Tensor<double> y =
      BatchNorm(Tensor<double>({1, 1, 1, 2}, std::vector<double>{1, 3}), one);
  EXPECT_EQ(y[0], -1.0);
  EXPECT_EQ(y[1], 1.0);
}

TEST(BatchNormTest, TrainModeStatisticsAndRunningUpdate) {
  BatchNormState<double> s = BatchNormState<double>::Identity(1);
  s.eps = 0;
  const Tensor<double> x({1, 1, 1, 4}, std::vector<double>{1, 2, 3, 6});
  const Tensor<double> y = BatchNorm(x, s);
  // mean 3, biased variance 3.5, unbiased 14/3.
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(y[i], (x[i] - 3.0) / std::sqrt(3.5), 1e-15);
  }
  EXPECT_NEAR(s.running_mean[0], 0.1 * 3.0, 1e-15);
  EXPECT_NEAR(s.running_var[0], 0.9 + 0.1 * 14.0 / 3.0, 1e-15);
  EXPECT_THROW(BatchNorm(Tensor<double>({1, 1, 1, 1}), s), InvalidInput);
  EXPECT_THROW(BatchNorm(Tensor<double>({1, 2, 1, 2}), s), InvalidInput);
}

TEST(ElementwiseTest, ReluTanhValues) {
  const Tensor<float> x({1, 1, 1, 3}, std::vector<float>{-1, 2, 0});
  const Tensor<float> r = Relu(x);
  EXPECT_EQ(r[0], 0);
  EXPECT_EQ(r[1], 2);
  EXPECT_EQ(Tanh(Tensor<float>({1, 1, 1, 1}))[0], 0.0f);
}

TEST(ElementwiseTest, TanhStrictlyInsideUnitInterval) {
  std::vector<float> v;
  for (float a : {1.0f, 9.0f, 20.0f, 100.0f, 1e30f, 3.4e38f}) {
    v.push_back(a);
    v.push_back(-a);
  }
  const Tensor<float> y = Tanh(Tensor<float>({1, 1, 1, int(v.size())}, v));
  for (size_t i = 0; i < y.size(); ++i) EXPECT_LT(std::abs(y[i]), 1.0f);
  const Tensor<double> yd =
      Tanh(Tensor<double>({1, 1, 1, 2}, std::vector<double>{50, -50}));
  EXPECT_LT(std::abs(yd[0]), 1.0);
  EXPECT_LT(std::abs(yd[1]), 1.0);
}

TEST(ElementwiseTest, TanhGradientMatchesFiniteDifference) {
  const double h = 1e-6;
  for (double v : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
    const Tensor<double> x({1, 1, 1, 1}, v);
    const Tensor<double> g =
        TanhBackward(Tanh(x), Tensor<double>({1, 1, 1, 1}, 1.0));
    const double numeric = (std::tanh(v + h) - std::tanh(v - h)) / (2 * h);
    EXPECT_LT(std::abs(g[0] - numeric) / std::max(std::abs(numeric), 1e-8),
              1e-8);
  }
}

TEST(ElementwiseTest, ScalarBroadcastAndLinear) {
  Rng rng(8);
  const Tensor<float> x = Uniform<float>(rng, {2, 3, 2, 2});
  const Tensor<float> zero({2, 3, 2, 2});
  EXPECT_EQ(Mul(AddScalar(1.0f, zero), x), x);
  EXPECT_EQ(Add(ScalarSub(1.0f, zero), Scale(-1.0f, AddScalar(1.0f, zero))),
            zero);
  EXPECT_EQ(Sub(x, x), zero);
  EXPECT_THROW(Add(x, Tensor<float>({1, 3, 2, 2})), InvalidInput);

  LinearParams<float> p;
  p.weight = Tensor<float>({4, 4, 1, 1});
  for (int i = 0; i < 4; ++i) p.weight.at(i, i, 0, 0) = 1;
  p.bias = Tensor<float>({1, 4, 1, 1});
  const Tensor<float> v = Uniform<float>(rng, {3, 4, 1, 1});
  EXPECT_EQ(Linear(v, p), v);
}

double UpsampleReference(const std::vector<double>& row, int dst) {
  const int width = static_cast<int>(row.size());
  double src = (dst + 0.5) / 2.0 - 0.5;
  src = std::clamp(src, 0.0, double(width - 1));
  const int i0 = static_cast<int>(std::floor(src));
  const int i1 = std::min(i0 + 1, width - 1);
  const double lambda = src - i0;
  return (1 - lambda) * row[i0] + lambda * row[i1];
}

TEST(UpsampleTest, HalfPixelProfile) {
  const Tensor<double> y =
      UpsampleFreq2x(Tensor<double>({1, 1, 1, 2}, std::vector<double>{0, 2}));
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 4}));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(y[i], UpsampleReference({0, 2}, i));
  EXPECT_EQ(y[1], 0.5);
  EXPECT_EQ(y[2], 1.5);
}

TEST(UpsampleTest, RandomRowsMatchReferenceAndConstantsSurvive) {
  Rng rng(4);
  const Tensor<double> x = Uniform<double>(rng, {2, 3, 4, 5});
  const Tensor<double> y = UpsampleFreq2x(x);
  ASSERT_EQ(y.shape(), (Shape{2, 3, 4, 10}));
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 3; ++c) {
      for (int t = 0; t < 4; ++t) {
        std::vector<double> row(5);
        for (int f = 0; f < 5; ++f) row[f] = x.at(n, c, t, f);
        for (int f = 0; f < 10; ++f) {
          EXPECT_NEAR(y.at(n, c, t, f), UpsampleReference(row, f), 1e-15);
        }
      }
    }
  }
  const Tensor<float> k = UpsampleFreq2x(Tensor<float>({1, 2, 3, 4}, 0.25f));
  for (size_t i = 0; i < k.size(); ++i) EXPECT_EQ(k[i], 0.25f);
}

TEST(ConcatTest, ShapeAndSplitRoundTrip) {
  Rng rng(6);
  const Tensor<float> a = Uniform<float>(rng, {1, 2, 1, 1});
  const Tensor<float> b = Uniform<float>(rng, {1, 3, 1, 1});
  const Tensor<float> ab = ConcatChannels(a, b);
  EXPECT_EQ(ab.shape(), (Shape{1, 5, 1, 1}));
  EXPECT_EQ(ab[0], a[0]);
  const auto [x, y] = SplitChannels(ab, 2);
  EXPECT_EQ(x, a);
  EXPECT_EQ(y, b);
  EXPECT_THROW(ConcatChannels(a, Tensor<float>({1, 3, 2, 1})), InvalidInput);
}

TEST(ConcatTest, ZeroBlockDoesNotContribute) {
  Rng rng(7);
  const Tensor<float> x = Uniform<float>(rng, {2, 3, 4, 4});
  ConvParams<float> full;
  full.weight = Tensor<float>({2, 5, 1, 1});
  ConvParams<float> half;
  half.weight = Uniform<float>(rng, {2, 3, 1, 1});
  for (int o = 0; o < 2; ++o) {
    for (int c = 0; c < 3; ++c) {
      full.weight.at(o, c, 0, 0) = half.weight.at(o, c, 0, 0);
      full.weight.at(o, c + 2, 0, 0) = 0;
    }
  }
  const Tensor<float> cat = ConcatChannels(x, Tensor<float>({2, 2, 4, 4}));
  const Tensor<float> a = Conv2d(cat, full);
  const Tensor<float> b = Conv2d(x, half);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
}

TEST(StatsPoolTest, Examples) {
  const Tensor<double> c = StatsPool(Tensor<double>({1, 1, 5, 1}, 3.0));
  ASSERT_EQ(c.shape(), (Shape{1, 2, 1, 1}));
  EXPECT_EQ(c[0], 3.0);
  EXPECT_NEAR(c[1], 1e-5, 1e-12);

  const Tensor<double> two =
      StatsPool(Tensor<double>({1, 1, 2, 1}, std::vector<double>{0, 2}));
  EXPECT_EQ(two[0], 1.0);
  EXPECT_EQ(two[1], 1.0);
}

TEST(StatsPoolTest, LengthAndTimePermutationInvariance) {
  Rng rng(9);
  const Tensor<double> x = Uniform<double>(rng, {2, 3, 6, 4});
  const Tensor<double> y = StatsPool(x);
  EXPECT_EQ(y.shape(), (Shape{2, 2 * 3 * 4, 1, 1}));
  Tensor<double> perm = x;
  const int order[6] = {4, 1, 5, 0, 3, 2};
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 3; ++c) {
      for (int t = 0; t < 6; ++t) {
        for (int f = 0; f < 4; ++f) perm.at(n, c, t, f) = x.at(n, c, order[t], f);
      }
    }
  }
  const Tensor<double> z = StatsPool(perm);
  for (size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], z[i], 1e-14);
}

TEST(GradCheckTest, RegisteredSingleKernelsPass) {
  for (const std::string op :
       {"conv2d", "conv2d_stride", "batchnorm_train", "batchnorm_infer",
        "relu", "tanh", "upsample_freq", "concat", "stats_pool", "linear",
        "ew_add", "ew_mul", "ew_scalar"}) {
    const GradCheckReport r = GradCheck(op, 7);
    EXPECT_TRUE(r.pass) << op << " max_rel_error " << r.max_rel_error;
    EXPECT_EQ(r.pass, r.max_rel_error < r.tolerance) << op;
  }
}

TEST(GradCheckTest, UnknownOpRejected) {
  EXPECT_THROW(GradCheck("no_such_op", 1), InvalidInput);
}

TEST(GradCheckTest, CorruptedGradientFails) {
  GradCheckOptions options;
  options.corrupt = 0.01;
  const GradCheckReport r = GradCheck("conv2d", 7, options);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.max_rel_error, 1e-3);
}

}  // namespace
}  // namespace bmfa
