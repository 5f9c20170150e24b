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

#include "bmfa/pipeline.h"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bmfa/text_format.h"

namespace bmfa {
namespace fs = std::filesystem;
namespace {

inline constexpr char kVersion[] = "1.0.0";

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << text;
}

fs::path Join(const std::string& dir, const std::string& name) {
  return fs::path(dir) / name;
}

}  // namespace

void WriteStamp(const std::string& dir, const std::string& command,
                const RunConfig& config) {
  fs::create_directories(dir);
  nlohmann::ordered_json j;
  j["tool"] = "bmfa";
  j["version"] = kVersion;
  j["command"] = command;
  j["config_hash"] = ConfigHash(config);
  j["train_seed"] = config.seed ? nlohmann::ordered_json(*config.seed)
                                : nlohmann::ordered_json(nullptr);
  j["data_seed"] = config.data.seed;
  j["formats"] = {{"config", kConfigVersion},
                  {"btf", 1},
                  {"checkpoint", kCheckpointVersion},
                  {"text", kTextFormatVersion}};
  WriteText(Join(dir, command + ".stamp.json"), j.dump(2) + "\n");
  WriteText(Join(dir, command + ".config.json"), ConfigToJson(config));
}

void GenData(const RunConfig& config, const std::string& out_dir) {
  WriteCorpus(GenerateCorpus(config.data), out_dir);
  WriteStamp(out_dir, "gen-data", config);
}

void ExtractFeatureFiles(const RunConfig& config, const std::string& manifest,
                         const std::string& out_dir) {
  fs::create_directories(Join(out_dir, "feats"));
  std::vector<ManifestEntry> out;
  for (const auto& e : ReadManifest(manifest)) {
    const Waveform w = ReadWav(e.path);
    BMFA_REQUIRE(w.sample_rate == config.frontend.sample_rate,
                 "extract-features: " + e.path + " is sampled at " +
                     std::to_string(w.sample_rate) + " Hz, config expects " +
                     std::to_string(config.frontend.sample_rate));
    const std::string rel = "feats/" + e.utt + ".btf";
    SaveTensor(Join(out_dir, rel).string(),
               ExtractFeatures(w, config.frontend));
    out.push_back({e.utt, e.speaker, rel});
  }
  WriteManifest(Join(out_dir, "feats.list").string(), out);
  WriteStamp(out_dir, "extract-features", config);
}

TrainedModel TrainModel(const RunConfig& config, const std::string& manifest,
                        const std::string& out_dir) {
  const TrainConfig train = config.Training();
  const std::vector<Utterance> utts = LoadUtterances(manifest);
  fs::create_directories(out_dir);
  std::ofstream metrics(Join(out_dir, "metrics.txt"));
  if (!metrics) throw FormatError("train: cannot write metrics in " + out_dir);
  WriteMetricsHeader(metrics);
  TrainedModel model =
      Train(config.model, train, utts,
            [&](const StepRecord& r) { WriteStepRecord(metrics, r); });
  SaveCheckpoint(Join(out_dir, "model.ckpt").string(), model.Checkpoint());
  WriteStamp(out_dir, "train", config);
  return model;
}

void ExtractEmbeddingFile(const RunConfig& config,
                          const std::string& checkpoint,
                          const std::string& manifest,
                          const std::string& out_path) {
  TrainedModel model = LoadTrained(config.model, checkpoint);
  const std::vector<Utterance> utts = LoadUtterances(manifest);
  const EmbeddingTable table = ExtractEmbeddings(model.net, utts);
  std::vector<std::string> ids;
  std::vector<std::vector<float>> vectors;
  for (const auto& u : utts) {
    ids.push_back(u.utt);
    vectors.push_back(table.at(u.utt));
  }
  WriteEmbeddings(out_path, ids, vectors);
  WriteStamp(fs::path(out_path).parent_path().string(), "extract", config);
}

void ScoreFile(const std::string& embeddings, const std::string& trials,
               const std::string& out_path) {
  const std::vector<Trial> list = ReadTrials(trials);
  WriteScores(out_path, list, ScoreTrials(ReadEmbeddings(embeddings), list));
}

DetMetrics EvalScores(const RunConfig& config, const std::string& scores) {
  return Evaluate(ReadScores(scores), config.eval);
}

std::vector<StrategyId> CompareGrid() {
  return {StrategyId::Parse("baseline", "none"),
          StrategyId::Parse("mfa_s34", "concat"),
          StrategyId::Parse("mfa_s34", "afm"),
          StrategyId::Parse("mea_fpm", "add"),
          StrategyId::Parse("mea_fpm", "afm"),
          StrategyId::Parse("bmfa", "concat"),
          StrategyId::Parse("bmfa", "add"),
          StrategyId::Parse("bmfa", "afm")};
}

CellResult RunCell(const RunConfig& config, const std::string& corpus_dir,
                   const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  TrainedModel model =
      TrainModel(config, Join(corpus_dir, "train.list").string(), out_dir);
  const std::vector<Utterance> test =
      LoadUtterances(Join(corpus_dir, "test.list").string());
  const EmbeddingTable table = ExtractEmbeddings(model.net, test);
  std::vector<std::string> ids;
  std::vector<std::vector<float>> vectors;
  for (const auto& u : test) {
    ids.push_back(u.utt);
    vectors.push_back(table.at(u.utt));
  }
  WriteEmbeddings(Join(out_dir, "embeddings.txt").string(), ids, vectors);
  const std::vector<Trial> trials =
      ReadTrials(Join(corpus_dir, "trials.txt").string());
  const std::vector<double> scores = ScoreTrials(table, trials);
  WriteScores(Join(out_dir, "scores.txt").string(), trials, scores);

  CellResult r;
  r.id = config.model.id;
  r.lowest_stage = config.model.lowest_stage;
  r.metrics = Evaluate(Label(trials, scores), config.eval);
  r.steps = static_cast<int>(model.curve.size());
  const size_t tail = std::min<size_t>(50, model.curve.size());
  for (size_t i = model.curve.size() - tail; i < model.curve.size(); ++i) {
    r.final_accuracy += model.curve[i].accuracy / tail;
  }
  r.seconds = std::chrono::duration<double>(
                  std::chrono::steady_clock::now() - start)
                  .count();
  return r;
}

std::vector<CellResult> Compare(const RunConfig& config,
                                const std::string& corpus_dir,
                                const std::string& out_dir) {
  std::vector<CellResult> cells;
  for (const StrategyId& id : CompareGrid()) {
    RunConfig cell = config;
    cell.model.id = id;
    cell.model.lowest_stage = 1;
    cell.Finalize();
    const std::string name = id.StrategyName() + "_" +
                             (id.fusion ? ToString(*id.fusion) : "none");
    cells.push_back(RunCell(cell, corpus_dir, Join(out_dir, name).string()));
  }
  WriteText(Join(out_dir, "compare.txt"), FormatCompareTable(cells));
  WriteStamp(out_dir, "compare", config);
  return cells;
}

std::string FormatCompareTable(const std::vector<CellResult>& cells) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %-8s %9s %8s %9s\n", "strategy",
                "fusion", "EER(%)", "minDCF", "train_acc");
  os << buf;
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof(buf), "%-10s %-8s %9.2f %8.4f %9.3f\n",
                  c.id.StrategyName().c_str(), c.id.FusionName().c_str(),
                  100.0 * c.metrics.eer, c.metrics.min_dcf, c.final_accuracy);
    os << buf;
  }
  return os.str();
}

}  // namespace bmfa
