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

#include "bmfa/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <numbers>
#include <random>

namespace bmfa {
namespace {

std::string Id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i);
  return buf;
}

}  // namespace

void CorpusConfig::Validate() const {
  BMFA_REQUIRE(n_speakers >= 2, "corpus: n_speakers must be >= 2");
  BMFA_REQUIRE(utts_per_speaker >= 1, "corpus: utts_per_speaker must be >= 1");
  BMFA_REQUIRE(heldout_per_speaker >= 0 &&
                   heldout_per_speaker < utts_per_speaker,
               "corpus: heldout_per_speaker must be in [0, utts_per_speaker)");
  BMFA_REQUIRE(min_frames >= 1 && max_frames >= min_frames,
               "corpus: need 1 <= min_frames <= max_frames");
  BMFA_REQUIRE(dims >= 1, "corpus: dims must be >= 1");
  BMFA_REQUIRE(template_scale > 0, "corpus: template_scale must be > 0");
  BMFA_REQUIRE(noise_scale > 0, "corpus: noise_scale must be > 0");
  BMFA_REQUIRE(drift_ratio >= 0, "corpus: drift_ratio must be >= 0");
  BMFA_REQUIRE(min_period > 0 && max_period >= min_period,
               "corpus: need 0 < min_period <= max_period");
}

Corpus GenerateCorpus(const CorpusConfig& config) {
  config.Validate();
  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Corpus corpus;
  for (int s = 0; s < config.n_speakers; ++s) {
    std::vector<double> t(config.dims);
    for (double& v : t) v = config.template_scale * normal(rng);
    corpus.templates.push_back(std::move(t));
  }
  const double sigma = config.noise_scale;
  const double drift = config.drift_ratio * config.noise_scale;
  const int span = config.max_frames - config.min_frames + 1;
  std::vector<double> direction(config.dims);
  for (int s = 0; s < config.n_speakers; ++s) {
    for (int u = 0; u < config.utts_per_speaker; ++u) {
      Utterance utt;
      utt.speaker = Id("spk", s);
      utt.utt = utt.speaker + "-" + Id("utt", u);
      utt.label = s;
      const int frames =
          config.min_frames + static_cast<int>(rng() % uint64_t(span));
      for (double& v : direction) v = normal(rng);
      const double period =
          config.min_period + (config.max_period - config.min_period) * unit(rng);
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      utt.features = FeatureMatrix({1, 1, frames, config.dims});
      for (int t = 0; t < frames; ++t) {
        const double wave =
            drift * std::sin(2.0 * std::numbers::pi * t / period + phase);
        for (int d = 0; d < config.dims; ++d) {
          utt.features.at(0, 0, t, d) = static_cast<float>(
              corpus.templates[s][d] + sigma * normal(rng) +
              wave * direction[d]);
        }
      }
      const bool heldout =
          u >= config.utts_per_speaker - config.heldout_per_speaker;
      (heldout ? corpus.test : corpus.train).push_back(std::move(utt));
    }
  }
  return corpus;
}

std::vector<Trial> AllPairsTrials(const std::vector<Utterance>& utts) {
  std::vector<Trial> trials;
  for (size_t i = 0; i < utts.size(); ++i) {
    for (size_t j = i + 1; j < utts.size(); ++j) {
      trials.push_back(
          {utts[i].utt, utts[j].utt, utts[i].speaker == utts[j].speaker});
    }
  }
  return trials;
}

void WriteCorpus(const Corpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "feats");
  auto write = [&](const std::vector<Utterance>& utts, const char* name) {
    std::vector<ManifestEntry> entries;
    for (const auto& u : utts) {
      const std::string rel = "feats/" + u.utt + ".btf";
      SaveTensor((fs::path(dir) / rel).string(), u.features);
      entries.push_back({u.utt, u.speaker, rel});
    }
    WriteManifest((fs::path(dir) / name).string(), entries);
  };
  write(corpus.train, "train.list");
  write(corpus.test, "test.list");
  WriteTrials((fs::path(dir) / "trials.txt").string(),
              AllPairsTrials(corpus.test));
}

std::vector<std::string> SpeakerIds(const std::vector<Utterance>& utts) {
  std::vector<std::string> ids;
  for (const auto& u : utts) ids.push_back(u.speaker);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<Utterance> LoadUtterances(const std::string& manifest) {
  std::vector<Utterance> utts;
  for (const auto& e : ReadManifest(manifest)) {
    Utterance u;
    u.utt = e.utt;
    u.speaker = e.speaker;
    u.features = LoadTensor<float>(e.path);
    BMFA_REQUIRE(u.features.n() == 1 && u.features.c() == 1,
                 "corpus: " + e.path + " is not a (1,1,T,F) feature matrix");
    utts.push_back(std::move(u));
  }
  const std::vector<std::string> ids = SpeakerIds(utts);
  for (auto& u : utts) {
    u.label = static_cast<int>(
        std::lower_bound(ids.begin(), ids.end(), u.speaker) - ids.begin());
  }
  return utts;
}

double NearestTemplateAccuracy(const Corpus& corpus,
                               const std::vector<Utterance>& utts) {
  if (utts.empty()) return 0.0;
  int correct = 0;
  for (const auto& u : utts) {
    const int frames = u.features.t();
    const int dims = u.features.f();
    std::vector<double> mean(dims, 0.0);
    for (int t = 0; t < frames; ++t) {
      for (int d = 0; d < dims; ++d) mean[d] += u.features.at(0, 0, t, d);
    }
    for (double& v : mean) v /= frames;
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (size_t s = 0; s < corpus.templates.size(); ++s) {
      double dist = 0;
      for (int d = 0; d < dims; ++d) {
        const double diff = mean[d] - corpus.templates[s][d];
        dist += diff * diff;
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = static_cast<int>(s);
      }
    }
    if (best == u.label) ++correct;
  }
  return static_cast<double>(correct) / utts.size();
}

}  // namespace bmfa
