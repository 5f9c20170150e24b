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

#ifndef BMFA_PIPELINE_H_
#define BMFA_PIPELINE_H_

#include <string>
#include <vector>

#include "bmfa/config.h"
#include "bmfa/training.h"

namespace bmfa {

// Writes <dir>/<command>.stamp.json: config hash, seeds and the versions of
// every file format, plus the resolved config as <dir>/<command>.config.json.
void WriteStamp(const std::string& dir, const std::string& command,
                const RunConfig& config);

// Synthetic corpus from config.data under out_dir.
void GenData(const RunConfig& config, const std::string& out_dir);

// Fbank features for every wav in a manifest. Writes feats/<utt>.btf and
// feats.list under out_dir.
void ExtractFeatureFiles(const RunConfig& config, const std::string& manifest,
                         const std::string& out_dir);

// Trains on a feature manifest. Writes model.ckpt and metrics.txt under
// out_dir.
TrainedModel TrainModel(const RunConfig& config, const std::string& manifest,
                        const std::string& out_dir);

// Embeddings for every utterance of a feature manifest.
void ExtractEmbeddingFile(const RunConfig& config,
                          const std::string& checkpoint,
                          const std::string& manifest,
                          const std::string& out_path);

void ScoreFile(const std::string& embeddings, const std::string& trials,
               const std::string& out_path);

DetMetrics EvalScores(const RunConfig& config, const std::string& scores);

struct CellResult {
  StrategyId id;
  int lowest_stage = 1;
  DetMetrics metrics;
  double final_accuracy = 0;  // mean batch accuracy over the last 50 steps
  int steps = 0;
  double seconds = 0;
};

// The eight strategy x fusion systems in report order.
std::vector<StrategyId> CompareGrid();

// Trains config.model on the corpus train list, scores its test trials and
// leaves model.ckpt, metrics.txt, embeddings.txt and scores.txt in out_dir.
CellResult RunCell(const RunConfig& config, const std::string& corpus_dir,
                   const std::string& out_dir);

// Every cell of CompareGrid under out_dir/<strategy>_<fusion>, followed by
// out_dir/compare.txt.
std::vector<CellResult> Compare(const RunConfig& config,
                                const std::string& corpus_dir,
                                const std::string& out_dir);

std::string FormatCompareTable(const std::vector<CellResult>& cells);

}  // namespace bmfa

#endif  // BMFA_PIPELINE_H_
