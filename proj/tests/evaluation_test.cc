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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "bmfa/corpus.h"
#include "bmfa/metrics.h"
#include "bmfa/training.h"

namespace bmfa {
namespace {

namespace fs = std::filesystem;

// Frozen from the first validated toy run (bmfa+afm, configs/toy.json, seed
// 1, 600 steps: EER 2.44%).
constexpr double kToyEerBound = 0.035;

std::vector<ScoredTrial> Make(const std::vector<double>& targets,
                              const std::vector<double>& nontargets) {
  std::vector<ScoredTrial> out;
  for (double s : targets) out.push_back({s, true});
  for (double s : nontargets) out.push_back({s, false});
  return out;
}

struct Rates {
  double p_miss;
  double p_fa;
};

// Accepts scores >= threshold; counts every trial for every threshold.
Rates BruteRates(const std::vector<ScoredTrial>& trials, double threshold) {
  double nt = 0, nn = 0, miss = 0, fa = 0;
  for (const auto& t : trials) {
    if (t.target) {
      ++nt;
      if (t.score < threshold) ++miss;
    } else {
      ++nn;
      if (t.score >= threshold) ++fa;
    }
  }
  return {miss / nt, fa / nn};
}

// Thresholds below every score, at each midpoint, and above every score.
std::vector<double> BruteThresholds(const std::vector<ScoredTrial>& trials) {
  std::vector<double> s;
  for (const auto& t : trials) s.push_back(t.score);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  std::vector<double> th = {-std::numeric_limits<double>::infinity()};
  for (size_t i = 0; i + 1 < s.size(); ++i) th.push_back(0.5 * (s[i] + s[i + 1]));
  th.push_back(std::numeric_limits<double>::infinity());
  return th;
}

double BruteMinDcf(const std::vector<ScoredTrial>& trials, double p_target) {
  const double norm = std::min(p_target, 1.0 - p_target);
  double best = std::numeric_limits<double>::infinity();
  for (double th : BruteThresholds(trials)) {
    const Rates r = BruteRates(trials, th);
    best = std::min(best,
                    (p_target * r.p_miss + (1.0 - p_target) * r.p_fa) / norm);
  }
  return best;
}

// Linear interpolation between the two sweep points bracketing the crossing.
double BruteEer(const std::vector<ScoredTrial>& trials) {
  std::vector<Rates> pts;
  for (double th : BruteThresholds(trials)) pts.push_back(BruteRates(trials, th));
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    const double da = pts[k].p_miss - pts[k].p_fa;
    const double db = pts[k + 1].p_miss - pts[k + 1].p_fa;
    if (da <= 0 && db >= 0) {
      const double a = da == db ? 0.0 : da / (da - db);
      return pts[k].p_miss + a * (pts[k + 1].p_miss - pts[k].p_miss);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<ScoredTrial> RandomSet(std::mt19937_64& rng) {
  const int nt = 1 + int(rng() % 30);
  const int nn = 1 + int(rng() % 60);
  const bool coarse = rng() % 2 == 0;
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](double mean) {
    const double v = mean + normal(rng);
    return coarse ? std::round(v * 4) / 4 : v;
  };
  std::vector<ScoredTrial> out;
  for (int i = 0; i < nt; ++i) out.push_back({draw(1.0), true});
  for (int i = 0; i < nn; ++i) out.push_back({draw(0.0), false});
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

TEST(EerTest, FixedExample) {
  const auto t = Make({0.9, 0.8, 0.7, 0.3}, {0.6, 0.4, 0.2, 0.1});
  EXPECT_DOUBLE_EQ(ComputeEer(t).eer, 0.25);
  EXPECT_DOUBLE_EQ(BruteEer(t), 0.25);
}

TEST(EerTest, SeparatedInvertedAndTied) {
  const auto sep = Make({0.9, 0.8}, {0.1, 0.2, 0.3});
  EXPECT_EQ(ComputeEer(sep).eer, 0.0);
  EXPECT_EQ(ComputeMinDcf(sep), 0.0);
  const auto inv = Make({0.1, 0.2, 0.3}, {0.9, 0.8});
  EXPECT_EQ(ComputeEer(inv).eer, 1.0);
  const auto tied = Make({0.5, 0.5}, {0.5, 0.5, 0.5});
  EXPECT_EQ(ComputeMinDcf(tied), 1.0);
  EXPECT_EQ(ComputeMinDcf(tied, {0.5, 1, 1}), 1.0);
}

TEST(EerTest, RejectsDegenerateLists) {
  EXPECT_THROW(ComputeEer(Make({0.1}, {})), InvalidInput);
  EXPECT_THROW(ComputeEer(Make({}, {0.1})), InvalidInput);
  EXPECT_THROW(ComputeEer({}), InvalidInput);
  EXPECT_THROW(ComputeMinDcf(Make({0.1}, {0.2}), {0.0, 1, 1}), InvalidInput);
  EXPECT_THROW(ComputeEer(Make({std::nan("")}, {0.2})), NumericError);
}

TEST(EerTest, MatchesBruteForceOnRandomSets) {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 1000; ++k) {
    const auto t = RandomSet(rng);
    ASSERT_EQ(ComputeEer(t).eer, BruteEer(t)) << "set " << k;
    ASSERT_EQ(ComputeMinDcf(t), BruteMinDcf(t, 0.01)) << "set " << k;
    ASSERT_EQ(ComputeMinDcf(t, {0.3, 1, 1}), BruteMinDcf(t, 0.3)) << k;
  }
}

TEST(EerTest, InvariantUnderMonotoneTransformAndPermutation) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 100; ++k) {
    auto t = RandomSet(rng);
    const double eer = ComputeEer(t).eer;
    const double dcf = ComputeMinDcf(t);
    auto mapped = t;
    for (auto& s : mapped) s.score = std::exp(3 * s.score) - 5;
    EXPECT_EQ(ComputeEer(mapped).eer, eer);
    EXPECT_EQ(ComputeMinDcf(mapped), dcf);
    std::shuffle(t.begin(), t.end(), rng);
    EXPECT_EQ(ComputeEer(t).eer, eer);
    EXPECT_EQ(ComputeMinDcf(t), dcf);
  }
}

TEST(EerTest, MinDcfBelowCostAtEerThreshold) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 200; ++k) {
    const auto t = RandomSet(rng);
    const EerResult eer = ComputeEer(t);
    const Rates r = BruteRates(t, eer.threshold);
    const double at_eer = (0.01 * r.p_miss + 0.99 * r.p_fa) / 0.01;
    EXPECT_LE(ComputeMinDcf(t), at_eer + 1e-12);
    EXPECT_GE(eer.eer, 0.0);
    EXPECT_LE(eer.eer, 1.0);
  }
}

TEST(CosineTest, BasicValues) {
  const std::vector<float> a = {1, 2, 3}, b = {-2, 1, 0};
  EXPECT_DOUBLE_EQ(CosineScore(a, a), 1.0);
  EXPECT_DOUBLE_EQ(CosineScore(a, b), 0.0);
  const std::vector<float> neg = {-1, -2, -3};
  EXPECT_DOUBLE_EQ(CosineScore(a, neg), -1.0);
  const std::vector<float> zero = {0, 0, 0};
  EXPECT_THROW(CosineScore(a, zero), NumericError);
  EXPECT_THROW(CosineScore(a, std::vector<float>{1, 2}), InvalidInput);
}

TEST(CosineTest, SymmetricAndBounded) {
  std::mt19937_64 rng(9);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (int k = 0; k < 100; ++k) {
    std::vector<float> a(512), b(512);
    for (auto& v : a) v = normal(rng);
    for (auto& v : b) v = normal(rng);
    const double ab = CosineScore(a, b);
    EXPECT_EQ(ab, CosineScore(b, a));
    EXPECT_LE(std::abs(ab), 1.0);
  }
}

TEST(TextFilesTest, TrialsScoresEmbeddingsRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "bmfa_eval_test";
  fs::create_directories(dir);
  const std::vector<Trial> trials = {{"a", "b", true}, {"a", "c", false}};
  WriteTrials((dir / "trials.txt").string(), trials);
  const auto back = ReadTrials((dir / "trials.txt").string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].test, "c");
  EXPECT_FALSE(back[1].target);

  WriteEmbeddings((dir / "emb.txt").string(), {"a", "b", "c"},
                  {{1.0f / 3, 2}, {0.1f, 1e-7f}, {-5, 0.25f}});
  const EmbeddingTable table = ReadEmbeddings((dir / "emb.txt").string());
  EXPECT_EQ(table.at("a")[0], 1.0f / 3);
  EXPECT_EQ(table.at("b")[1], 1e-7f);
  const std::vector<double> scores = ScoreTrials(table, trials);
  WriteScores((dir / "scores.txt").string(), trials, scores);
  const auto scored = ReadScores((dir / "scores.txt").string());
  ASSERT_EQ(scored.size(), 2u);
  EXPECT_EQ(scored[0].score, scores[0]);
  EXPECT_EQ(scored[1].score, scores[1]);
  EXPECT_TRUE(scored[0].target);

  EXPECT_THROW(ScoreTrials(table, {{"a", "zz", true}}), InvalidInput);
  std::ofstream(dir / "bad.txt") << "#bmfa trials 1\na b maybe\n";
  EXPECT_THROW(ReadTrials((dir / "bad.txt").string()), FormatError);
  std::ofstream(dir / "future.txt") << "#bmfa trials 9\na b target\n";
  EXPECT_THROW(ReadTrials((dir / "future.txt").string()), FormatError);
  std::ofstream(dir / "kind.txt") << "#bmfa scores 1\na b target 0.5\n";
  EXPECT_THROW(ReadTrials((dir / "kind.txt").string()), FormatError);
  std::ofstream(dir / "ragged.txt") << "a 1 2\nb 1\n";
  EXPECT_THROW(ReadEmbeddings((dir / "ragged.txt").string()), FormatError);
  EXPECT_THROW(ReadScores((dir / "missing.txt").string()), FormatError);
}

TEST(ProtocolTest, SelfTrialsGiveZeroEer) {
  std::mt19937_64 rng(10);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  EmbeddingTable table;
  std::vector<Trial> trials;
  for (int i = 0; i < 20; ++i) {
    std::vector<float> v(512);
    for (auto& x : v) x = normal(rng);
    table["u" + std::to_string(i)] = v;
  }
  for (const auto& [a, va] : table) {
    for (const auto& [b, vb] : table) trials.push_back({a, b, a == b});
  }
  const auto scored = Label(trials, ScoreTrials(table, trials));
  EXPECT_EQ(ComputeEer(scored).eer, 0.0);
  EXPECT_EQ(ComputeMinDcf(scored), 0.0);
}

TEST(ProtocolTest, ToyHeldOutEerWithinFrozenBound) {
  CorpusConfig data;
  data.template_scale = 0.15;
  data.drift_ratio = 0.7;
  const Corpus corpus = GenerateCorpus(data);
  ModelConfig model;
  model.id = StrategyId::Parse("bmfa", "afm");
  model.backbone.width = 4;
  model.backbone.blocks = {1, 1, 1, 1};
  TrainConfig train;
  train.steps = 600;
  train.seed = 1;
  TrainedModel trained = Train(model, train, corpus.train);
  const auto trials = AllPairsTrials(corpus.test);
  const auto scored =
      Label(trials, ScoreTrials(ExtractEmbeddings(trained.net, corpus.test),
                                trials));
  const DetMetrics m = Evaluate(scored, {});
  RecordProperty("toy_eer", std::to_string(m.eer));
  EXPECT_EQ(m.trials, 19900);
  EXPECT_LE(m.eer, kToyEerBound);
}

}  // namespace
}  // namespace bmfa
