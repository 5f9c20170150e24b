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

#include "bmfa/training.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bmfa/optimizer.h"
#include "bmfa/text_format.h"

namespace bmfa {
namespace {

// Independent streams for model init, classifier init and data sampling.
struct Seeds {
  uint64_t model;
  uint64_t classifier;
  uint64_t data;
};

Seeds DeriveSeeds(uint64_t seed) {
  Rng master(seed);
  Seeds s;
  s.model = master();
  s.classifier = master();
  s.data = master();
  return s;
}

// Cycles through the training set in per-epoch shuffled order.
class BatchSampler {
 public:
  BatchSampler(size_t count, uint64_t seed) : order_(count), rng_(seed) {
    std::iota(order_.begin(), order_.end(), size_t{0});
    Shuffle();
  }

  size_t Next() {
    if (pos_ == order_.size()) Shuffle();
    return order_[pos_++];
  }

  Rng& rng() { return rng_; }

 private:
  void Shuffle() {
    // Fisher-Yates with an explicit modulus keeps the order identical
    // across standard libraries.
    for (size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng_() % i]);
    }
    pos_ = 0;
  }

  std::vector<size_t> order_;
  Rng rng_;
  size_t pos_ = 0;
};

}  // namespace

void TrainConfig::Validate() const {
  BMFA_REQUIRE(steps >= 0, "train: steps must be >= 0");
  BMFA_REQUIRE(batch >= 2, "train: batch must be >= 2 for batch norm");
  BMFA_REQUIRE(crop_frames >= 2 && crop_frames % 2 == 0,
               "train: crop_frames must be even and >= 2");
  LrSchedule{lr_start, lr_end, std::max(steps, 1)}.Validate();
  loss.Validate();
}

void WriteMetricsHeader(std::ostream& os) {
  WriteTextHeader(os, "metrics");
  os << "# step lr loss accuracy\n";
}

void WriteStepRecord(std::ostream& os, const StepRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d %.9e %.9e %.6f\n", r.step, r.lr,
                r.loss, r.accuracy);
  os << buf;
}

std::vector<StepRecord> ReadMetrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("metrics: cannot open " + path);
  std::vector<StepRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (SkipTextLine(line, "metrics", path)) continue;
    std::istringstream ss(line);
    StepRecord r;
    if (!(ss >> r.step >> r.lr >> r.loss >> r.accuracy)) {
      throw FormatError("metrics: malformed line in " + path + ": " + line);
    }
    records.push_back(r);
  }
  return records;
}

std::vector<NamedTensor> TrainedModel::Checkpoint() {
  std::vector<NamedTensor> entries = Snapshot(net.Params());
  entries.emplace_back(kClassifierName, classifier);
  return entries;
}

TrainedModel Train(const ModelConfig& model, const TrainConfig& config,
                   const std::vector<Utterance>& train,
                   const std::function<void(const StepRecord&)>& on_step) {
  model.Validate();
  config.Validate();
  BMFA_REQUIRE(!train.empty(), "train: no training utterances");
  int n_classes = 0;
  for (const auto& u : train) {
    BMFA_REQUIRE(u.features.t() >= config.crop_frames,
                 "train: utterance " + u.utt + " has " +
                     std::to_string(u.features.t()) + " frames, crop needs " +
                     std::to_string(config.crop_frames));
    BMFA_REQUIRE(u.features.f() == model.backbone.n_mels,
                 "train: utterance " + u.utt + " has wrong feature dim");
    BMFA_REQUIRE(u.label >= 0, "train: negative label on " + u.utt);
    n_classes = std::max(n_classes, u.label + 1);
  }
  BMFA_REQUIRE(n_classes >= 2, "train: need at least two speakers");

  const Seeds seeds = DeriveSeeds(config.seed);
  TrainedModel out{SpeakerNet<float>::Build(model, seeds.model), {}, {}};
  Rng classifier_rng(seeds.classifier);
  out.classifier =
      InitClassifier<float>(classifier_rng, n_classes, model.embedding_dim);

  ParamList<float> params = out.net.Params();
  std::vector<Tensor<float>*> trainable;
  for (const auto& ref : params.refs()) {
    if (ref.trainable) trainable.push_back(ref.tensor);
  }
  trainable.push_back(&out.classifier);
  Adam adam(trainable);
  const LrSchedule schedule{config.lr_start, config.lr_end,
                            std::max(config.steps, 1)};
  BatchSampler sampler(train.size(), seeds.data);
  out.net.SetMode(BnMode::kTrain);

  const int frames = config.crop_frames;
  const int mels = model.backbone.n_mels;
  for (int step = 0; step < config.steps; ++step) {
    Tensor<float> x({config.batch, 1, frames, mels});
    std::vector<int> labels(config.batch);
    for (int b = 0; b < config.batch; ++b) {
      const Utterance& u = train[sampler.Next()];
      const int start = static_cast<int>(
          sampler.rng()() % uint64_t(u.features.t() - frames + 1));
      for (int t = 0; t < frames; ++t) {
        for (int f = 0; f < mels; ++f) {
          x.at(b, 0, t, f) = u.features.at(0, 0, start + t, f);
        }
      }
      labels[b] = u.label;
    }

    Tape<float> tape;
    Var emb = out.net.Forward(tape, tape.Input(std::move(x)));
    int correct = 0;
    Var loss = nn::AmSoftmax(tape, emb, tape.Param(&out.classifier), labels,
                             config.loss, &correct);
    const double loss_value = tape.value(loss)[0];
    if (!std::isfinite(loss_value)) {
      throw NumericError("train: loss became non-finite at step " +
                         std::to_string(step) + " (" +
                         model.id.ToString() + ")");
    }
    tape.Backward(loss);
    std::vector<const Tensor<float>*> grads;
    for (Tensor<float>* p : trainable) grads.push_back(tape.GradFor(p));
    const double lr = schedule.At(step);
    adam.Step(grads, lr);

    StepRecord r{step, lr, loss_value,
                 static_cast<double>(correct) / config.batch};
    out.curve.push_back(r);
    if (on_step) on_step(r);
  }
  out.net.SetMode(BnMode::kInfer);
  return out;
}

TrainedModel LoadTrained(const ModelConfig& model, const std::string& path) {
  std::vector<NamedTensor> entries = LoadCheckpoint(path);
  TrainedModel out{SpeakerNet<float>::Build(model, 0), {}, {}};
  Restore(entries, out.net.Params(), {kClassifierName});
  for (auto& [name, tensor] : entries) {
    if (name == kClassifierName) out.classifier = std::move(tensor);
  }
  out.net.SetMode(BnMode::kInfer);
  return out;
}

EmbeddingTable ExtractEmbeddings(SpeakerNet<float>& net,
                                 const std::vector<Utterance>& utts) {
  net.SetMode(BnMode::kInfer);
  EmbeddingTable table;
  for (const auto& u : utts) {
    const int frames = u.features.t() - u.features.t() % 2;
    BMFA_REQUIRE(frames >= 2, "extract: utterance " + u.utt + " is too short");
    const Tensor<float> x = frames == u.features.t()
                                ? u.features
                                : SliceFrames(u.features, 0, frames);
    const Tensor<float> e = net.Embed(x);
    BMFA_REQUIRE(table.count(u.utt) == 0,
                 "extract: duplicate utterance id " + u.utt);
    table[u.utt] = std::vector<float>(e.data(), e.data() + e.size());
  }
  return table;
}

int StepReachingAccuracy(const std::vector<StepRecord>& curve, int window,
                         double target) {
  BMFA_REQUIRE(window >= 1, "accuracy window must be >= 1");
  double sum = 0;
  for (size_t i = 0; i < curve.size(); ++i) {
    sum += curve[i].accuracy;
    if (i >= size_t(window)) sum -= curve[i - window].accuracy;
    if (i + 1 >= size_t(window) && sum / window >= target) {
      return curve[i].step;
    }
  }
  return -1;
}

}  // namespace bmfa
