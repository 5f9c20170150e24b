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

#include "bmfa/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "bmfa/error.h"
#include "bmfa/text_format.h"

namespace bmfa {

std::vector<OperatingPoint> OperatingPoints(
    const std::vector<ScoredTrial>& trials) {
  long n_target = 0;
  long n_nontarget = 0;
  for (const auto& t : trials) {
    if (!std::isfinite(t.score)) {
      throw NumericError("metrics: non-finite score");
    }
    (t.target ? n_target : n_nontarget)++;
  }
  BMFA_REQUIRE(n_target > 0 && n_nontarget > 0,
               "metrics: need at least one target and one nontarget trial");
  std::vector<ScoredTrial> sorted = trials;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredTrial& a, const ScoredTrial& b) {
              return a.score < b.score;
            });
  // Scanning upward, targets below the threshold are misses and
  // nontargets at or above it are false alarms.
  std::vector<OperatingPoint> points;
  long misses = 0;
  long false_alarms = n_nontarget;
  size_t i = 0;
  while (i < sorted.size()) {
    const double threshold = sorted[i].score;
    points.push_back({threshold, static_cast<double>(misses) / n_target,
                      static_cast<double>(false_alarms) / n_nontarget});
    for (; i < sorted.size() && sorted[i].score == threshold; ++i) {
      if (sorted[i].target) {
        ++misses;
      } else {
        --false_alarms;
      }
    }
  }
  points.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
  return points;
}

EerResult EerFromPoints(const std::vector<OperatingPoint>& points) {
  for (size_t k = 0; k + 1 < points.size(); ++k) {
    const OperatingPoint& a = points[k];
    const OperatingPoint& b = points[k + 1];
    const double da = a.p_miss - a.p_fa;
    const double db = b.p_miss - b.p_fa;
    if (da > 0 || db < 0) continue;
    const double alpha = da == db ? 0.0 : da / (da - db);
    EerResult r;
    r.eer = a.p_miss + alpha * (b.p_miss - a.p_miss);
    r.threshold = std::isfinite(b.threshold)
                      ? a.threshold + alpha * (b.threshold - a.threshold)
                      : a.threshold;
    return r;
  }
  throw NumericError("metrics: miss and false-alarm curves never cross");
}

EerResult ComputeEer(const std::vector<ScoredTrial>& trials) {
  return EerFromPoints(OperatingPoints(trials));
}

double DcfAt(const OperatingPoint& point, const DcfParams& params) {
  const double norm = std::min(params.c_miss * params.p_target,
                               params.c_fa * (1.0 - params.p_target));
  return (params.c_miss * params.p_target * point.p_miss +
          params.c_fa * (1.0 - params.p_target) * point.p_fa) /
         norm;
}

void DcfParams::Validate() const {
  BMFA_REQUIRE(p_target > 0 && p_target < 1,
               "metrics: p_target must lie in (0, 1)");
  BMFA_REQUIRE(c_miss > 0 && c_fa > 0, "metrics: costs must be positive");
}

double ComputeMinDcf(const std::vector<ScoredTrial>& trials,
                     const DcfParams& params) {
  params.Validate();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : OperatingPoints(trials)) {
    best = std::min(best, DcfAt(p, params));
  }
  return best;
}

DetMetrics Evaluate(const std::vector<ScoredTrial>& trials,
                    const DcfParams& params) {
  DetMetrics m;
  const EerResult eer = ComputeEer(trials);
  m.eer = eer.eer;
  m.threshold_at_eer = eer.threshold;
  m.min_dcf = ComputeMinDcf(trials, params);
  m.trials = static_cast<int>(trials.size());
  return m;
}

double CosineScore(std::span<const float> a, std::span<const float> b) {
  BMFA_REQUIRE(a.size() == b.size(),
               "cosine: length mismatch " + std::to_string(a.size()) +
                   " vs " + std::to_string(b.size()));
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (!(na > 0) || !(nb > 0) || !std::isfinite(na) || !std::isfinite(nb)) {
    throw NumericError("cosine: zero or non-finite embedding norm");
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<Trial> ReadTrials(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("trials: cannot open " + path);
  std::vector<Trial> trials;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (SkipTextLine(line, "trials", path)) continue;
    std::istringstream ss(line);
    Trial t;
    std::string label, extra;
    if (!(ss >> t.enroll)) continue;
    if (!(ss >> t.test >> label) || (ss >> extra) ||
        (label != "target" && label != "nontarget")) {
      throw FormatError("trials: " + path + ":" + std::to_string(lineno) +
                        " needs 'enroll_id test_id target|nontarget'");
    }
    t.target = label == "target";
    trials.push_back(std::move(t));
  }
  return trials;
}

void WriteTrials(const std::string& path, const std::vector<Trial>& trials) {
  std::ofstream os(path);
  if (!os) throw FormatError("trials: cannot write " + path);
  WriteTextHeader(os, "trials");
  for (const auto& t : trials) {
    os << t.enroll << ' ' << t.test << ' '
       << (t.target ? "target" : "nontarget") << '\n';
  }
}

void WriteScores(const std::string& path, const std::vector<Trial>& trials,
                 const std::vector<double>& scores) {
  BMFA_REQUIRE(trials.size() == scores.size(),
               "scores: one score per trial required");
  std::ofstream os(path);
  if (!os) throw FormatError("scores: cannot write " + path);
  WriteTextHeader(os, "scores");
  os << std::setprecision(17);
  for (size_t i = 0; i < trials.size(); ++i) {
    os << trials[i].enroll << ' ' << trials[i].test << ' '
       << (trials[i].target ? "target" : "nontarget") << ' ' << scores[i]
       << '\n';
  }
}

void WriteEmbeddings(const std::string& path,
                     const std::vector<std::string>& ids,
                     const std::vector<std::vector<float>>& vectors) {
  BMFA_REQUIRE(ids.size() == vectors.size(),
               "embeddings: one vector per id required");
  std::ofstream os(path);
  if (!os) throw FormatError("embeddings: cannot write " + path);
  WriteTextHeader(os, "embeddings");
  os << std::setprecision(9);
  for (size_t i = 0; i < ids.size(); ++i) {
    os << ids[i];
    for (float v : vectors[i]) os << ' ' << v;
    os << '\n';
  }
  if (!os) throw FormatError("embeddings: write failed for " + path);
}

EmbeddingTable ReadEmbeddings(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("embeddings: cannot open " + path);
  EmbeddingTable table;
  std::string line;
  size_t dim = 0;
  while (std::getline(is, line)) {
    if (SkipTextLine(line, "embeddings", path)) continue;
    std::istringstream ss(line);
    std::string id;
    if (!(ss >> id)) continue;
    std::vector<float> v;
    float x;
    while (ss >> x) v.push_back(x);
    if (v.empty() || (dim != 0 && v.size() != dim)) {
      throw FormatError("embeddings: inconsistent vector for " + id);
    }
    dim = v.size();
    if (!table.emplace(id, std::move(v)).second) {
      throw FormatError("embeddings: duplicate id " + id);
    }
  }
  return table;
}

std::vector<ScoredTrial> ReadScores(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("scores: cannot open " + path);
  std::vector<ScoredTrial> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (SkipTextLine(line, "scores", path)) continue;
    std::istringstream ss(line);
    std::string enroll, test, label, extra;
    double score = 0;
    if (!(ss >> enroll >> test >> label >> score) || (ss >> extra) ||
        (label != "target" && label != "nontarget")) {
      throw FormatError("scores: " + path + ":" + std::to_string(lineno) +
                        " needs 'enroll_id test_id target|nontarget score'");
    }
    out.push_back({score, label == "target"});
  }
  return out;
}

std::vector<double> ScoreTrials(const EmbeddingTable& table,
                                const std::vector<Trial>& trials) {
  std::vector<double> scores;
  scores.reserve(trials.size());
  for (const auto& t : trials) {
    auto a = table.find(t.enroll);
    auto b = table.find(t.test);
    BMFA_REQUIRE(a != table.end(), "score: missing utterance " + t.enroll);
    BMFA_REQUIRE(b != table.end(), "score: missing utterance " + t.test);
    scores.push_back(CosineScore(a->second, b->second));
  }
  return scores;
}

std::vector<ScoredTrial> Label(const std::vector<Trial>& trials,
                               const std::vector<double>& scores) {
  BMFA_REQUIRE(trials.size() == scores.size(),
               "metrics: one score per trial required");
  std::vector<ScoredTrial> out(trials.size());
  for (size_t i = 0; i < trials.size(); ++i) {
    out[i] = {scores[i], trials[i].target};
  }
  return out;
}

}  // namespace bmfa
