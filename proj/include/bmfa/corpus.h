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

#ifndef BMFA_CORPUS_H_
#define BMFA_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "bmfa/frontend.h"
#include "bmfa/metrics.h"

namespace bmfa {

// Synthetic speakers standing in for real recordings. Frame t of an
// utterance of speaker s is
//   template_s + noise_scale * e_t + drift_ratio * noise_scale *
//   sin(2 pi t / period + phase) * u
// with e_t ~ N(0, I) per frame and, per utterance, a drift direction
// u ~ N(0, I), a period uniform in [min_period, max_period] frames and a
// phase uniform in [0, 2 pi). Templates are N(0, template_scale^2 I).
struct CorpusConfig {
  int n_speakers = 20;
  int utts_per_speaker = 50;
  int heldout_per_speaker = 10;
  int min_frames = 200;
  int max_frames = 400;
  int dims = 64;
  double template_scale = 0.1;
  double noise_scale = 0.5;
  double drift_ratio = 1.0;
  double min_period = 200;
  double max_period = 800;
  uint64_t seed = 1;

  void Validate() const;
};

struct Utterance {
  std::string utt;
  std::string speaker;
  int label = 0;
  FeatureMatrix features;
};

struct Corpus {
  std::vector<std::vector<double>> templates;
  std::vector<Utterance> train;
  std::vector<Utterance> test;  // the last heldout_per_speaker per speaker
};

Corpus GenerateCorpus(const CorpusConfig& config);

// Every unordered pair of distinct utterances.
std::vector<Trial> AllPairsTrials(const std::vector<Utterance>& utts);

// Writes feats/<utt>.btf, train.list, test.list (manifests with relative
// paths) and trials.txt (all test pairs) under dir.
void WriteCorpus(const Corpus& corpus, const std::string& dir);

// Loads a feature manifest; labels follow the sorted speaker ids.
std::vector<Utterance> LoadUtterances(const std::string& manifest);

// Sorted distinct speaker ids.
std::vector<std::string> SpeakerIds(const std::vector<Utterance>& utts);

// Fraction of utterances whose time-mean is nearest (Euclidean) to their
// own speaker's template.
double NearestTemplateAccuracy(const Corpus& corpus,
                               const std::vector<Utterance>& utts);

}  // namespace bmfa

#endif  // BMFA_CORPUS_H_
