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

#ifndef BMFA_TRAINING_H_
#define BMFA_TRAINING_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bmfa/aggregation.h"
#include "bmfa/am_softmax.h"
#include "bmfa/checkpoint.h"
#include "bmfa/corpus.h"
#include "bmfa/metrics.h"

namespace bmfa {

inline constexpr char kClassifierName[] = "classifier.weight";

struct TrainConfig {
  int steps = 2000;
  int batch = 16;
  int crop_frames = 100;  // even; every training utterance must be as long
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  uint64_t seed = 0;
  AmSoftmaxConfig loss;

  void Validate() const;
};

struct StepRecord {
  int step = 0;
  double lr = 0;
  double loss = 0;
  double accuracy = 0;  // fraction of the batch classified correctly
};

// Metrics file: a "# step lr loss accuracy" header, then one
// whitespace-separated record per step.
void WriteMetricsHeader(std::ostream& os);
void WriteStepRecord(std::ostream& os, const StepRecord& r);
std::vector<StepRecord> ReadMetrics(const std::string& path);

struct TrainedModel {
  SpeakerNet<float> net;
  Tensor<float> classifier;  // (n_speakers, embedding_dim, 1, 1)
  std::vector<StepRecord> curve;

  // Model tensors followed by the classifier.
  std::vector<NamedTensor> Checkpoint();
};

// Minibatch training with AM-softmax and Adam. Each epoch visits the
// training utterances in a fresh seeded order; every example is a random
// crop_frames window. Throws NumericError if the loss becomes non-finite.
// on_step, if set, sees every record as it is produced.
TrainedModel Train(const ModelConfig& model, const TrainConfig& config,
                   const std::vector<Utterance>& train,
                   const std::function<void(const StepRecord&)>& on_step = {});

// Rebuilds a trained model from a checkpoint written by Train.
TrainedModel LoadTrained(const ModelConfig& model, const std::string& path);

// Embeddings in BN inference mode over whole utterances. An odd frame count
// drops its last frame.
EmbeddingTable ExtractEmbeddings(SpeakerNet<float>& net,
                                 const std::vector<Utterance>& utts);

// Trailing mean of batch accuracy over `window` steps; the first step at
// which it reaches `target`, or -1.
int StepReachingAccuracy(const std::vector<StepRecord>& curve, int window,
                         double target);

}  // namespace bmfa

#endif  // BMFA_TRAINING_H_
