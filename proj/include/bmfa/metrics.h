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

#ifndef BMFA_METRICS_H_
#define BMFA_METRICS_H_

#include <map>
#include <span>
#include <string>
#include <vector>

namespace bmfa {

struct ScoredTrial {
  double score = 0;
  bool target = false;
};

// Miss and false-alarm rates when accepting scores >= threshold.
struct OperatingPoint {
  double threshold = 0;  // +inf for the reject-all point
  double p_miss = 0;
  double p_fa = 0;
};

// One point per distinct score in ascending order, then the reject-all
// point. O(N log N). Throws InvalidInput without at least one target and
// one nontarget.
std::vector<OperatingPoint> OperatingPoints(
    const std::vector<ScoredTrial>& trials);

struct EerResult {
  double eer = 0;
  double threshold = 0;
};

// Interpolated EER: linear interpolation between the two adjacent operating
// points where p_miss - p_fa changes sign.
EerResult ComputeEer(const std::vector<ScoredTrial>& trials);
EerResult EerFromPoints(const std::vector<OperatingPoint>& points);

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;
  void Validate() const;
};

// Minimum over operating points of c_miss*p_target*p_miss +
// c_fa*(1-p_target)*p_fa, normalized by min(c_miss*p_target,
// c_fa*(1-p_target)).
double ComputeMinDcf(const std::vector<ScoredTrial>& trials,
                     const DcfParams& params = {});
double DcfAt(const OperatingPoint& point, const DcfParams& params);

struct DetMetrics {
  double eer = 0;
  double threshold_at_eer = 0;
  double min_dcf = 0;
  int trials = 0;
};

DetMetrics Evaluate(const std::vector<ScoredTrial>& trials,
                    const DcfParams& params);

// Inner product of unit-normalized vectors. Throws NumericError for a zero
// or non-finite norm and InvalidInput for a length mismatch.
double CosineScore(std::span<const float> a, std::span<const float> b);

struct Trial {
  std::string enroll;
  std::string test;
  bool target = false;
};

// "enroll_id test_id target|nontarget" per line.
std::vector<Trial> ReadTrials(const std::string& path);
void WriteTrials(const std::string& path, const std::vector<Trial>& trials);
// Trial line plus the score.
void WriteScores(const std::string& path, const std::vector<Trial>& trials,
                 const std::vector<double>& scores);

using EmbeddingTable = std::map<std::string, std::vector<float>>;

// One line per utterance: id followed by the vector components.
void WriteEmbeddings(const std::string& path,
                     const std::vector<std::string>& ids,
                     const std::vector<std::vector<float>>& vectors);
EmbeddingTable ReadEmbeddings(const std::string& path);
std::vector<ScoredTrial> ReadScores(const std::string& path);

// Cosine score per trial; throws InvalidInput naming a missing utterance.
std::vector<double> ScoreTrials(const EmbeddingTable& table,
                                const std::vector<Trial>& trials);

std::vector<ScoredTrial> Label(const std::vector<Trial>& trials,
                               const std::vector<double>& scores);

}  // namespace bmfa

#endif  // BMFA_METRICS_H_
