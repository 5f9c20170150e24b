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

#include "bmfa/config.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <json.hpp>

namespace bmfa {
namespace {

using Json = nlohmann::ordered_json;

// Reads the keys of one JSON object and rejects whatever is left over.
class Section {
 public:
  Section(const Json& root, const std::string& name) : name_(name) {
    if (!root.contains(name)) return;
    node_ = &root.at(name);
    if (!node_->is_object()) {
      throw InvalidInput("config: section '" + name + "' must be an object");
    }
  }

  template <typename V>
  void Get(const std::string& key, V& out) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    const Json& v = node_->at(key);
    const std::string where = "config: " + name_ + "." + key;
    if constexpr (std::is_same_v<V, bool>) {
      if (!v.is_boolean()) throw InvalidInput(where + " must be a boolean");
    } else if constexpr (std::is_unsigned_v<V>) {
      if (!v.is_number_unsigned()) {
        throw InvalidInput(where + " must be a non-negative integer");
      }
    } else if constexpr (std::is_integral_v<V>) {
      if (!v.is_number_integer()) {
        throw InvalidInput(where + " must be an integer");
      }
    } else if constexpr (std::is_floating_point_v<V>) {
      if (!v.is_number()) throw InvalidInput(where + " must be a number");
    } else if constexpr (std::is_same_v<V, std::string>) {
      if (!v.is_string()) throw InvalidInput(where + " must be a string");
    }
    try {
      out = v.get<V>();
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput(where + ": " + e.what());
    }
  }

  bool Has(const std::string& key) const {
    return node_ != nullptr && node_->contains(key);
  }

  void Finish() const {
    if (node_ == nullptr) return;
    for (const auto& item : node_->items()) {
      if (!seen_.count(item.key())) {
        throw InvalidInput("config: unknown key '" + name_ + "." +
                           item.key() + "'");
      }
    }
  }

 private:
  std::string name_;
  const Json* node_ = nullptr;
  std::set<std::string> seen_;
};

Json ToJson(const RunConfig& c) {
  Json j;
  j["version"] = kConfigVersion;
  const FbankConfig& fe = c.frontend;
  j["frontend"] = {{"sample_rate", fe.sample_rate},
                   {"frame_len_ms", fe.frame_len_ms},
                   {"frame_shift_ms", fe.frame_shift_ms},
                   {"n_mels", fe.n_mels},
                   {"low_freq", fe.low_freq},
                   {"high_freq", fe.high_freq},
                   {"preemph", fe.preemph},
                   {"cmn_window_s", fe.cmn_window_s},
                   {"vad_offset", fe.vad_offset},
                   {"apply_vad", fe.apply_vad},
                   {"apply_cmn", fe.apply_cmn}};
  const CorpusConfig& d = c.data;
  j["data"] = {{"n_speakers", d.n_speakers},
               {"utts_per_speaker", d.utts_per_speaker},
               {"heldout_per_speaker", d.heldout_per_speaker},
               {"min_frames", d.min_frames},
               {"max_frames", d.max_frames},
               {"template_scale", d.template_scale},
               {"noise_scale", d.noise_scale},
               {"drift_ratio", d.drift_ratio},
               {"min_period", d.min_period},
               {"max_period", d.max_period},
               {"seed", d.seed}};
  const ModelConfig& m = c.model;
  const auto& blocks = m.backbone.blocks;
  j["model"] = {{"strategy", m.id.StrategyName()},
                {"fusion", m.id.fusion ? ToString(*m.id.fusion) : "none"},
                {"r", m.reduction},
                {"embedding_dim", m.embedding_dim},
                {"width", m.backbone.width},
                {"blocks", {blocks[0], blocks[1], blocks[2], blocks[3]}},
                {"lowest_stage", m.lowest_stage}};
  const TrainConfig& t = c.train;
  j["train"] = {{"steps", t.steps},         {"batch", t.batch},
                {"crop_frames", t.crop_frames}, {"lr_start", t.lr_start},
                {"lr_end", t.lr_end},       {"m", t.loss.margin},
                {"s", t.loss.scale}};
  if (c.seed) j["train"]["seed"] = *c.seed;
  j["eval"] = {{"p_target", c.eval.p_target},
               {"c_miss", c.eval.c_miss},
               {"c_fa", c.eval.c_fa}};
  return j;
}

}  // namespace

void RunConfig::Finalize() {
  frontend.Validate();
  data.dims = frontend.n_mels;
  model.backbone.n_mels = frontend.n_mels;
  data.Validate();
  model.Validate();
  train.Validate();
  eval.Validate();
}

TrainConfig RunConfig::Training() const {
  BMFA_REQUIRE(seed.has_value(), "config: train.seed is required for training");
  TrainConfig t = train;
  t.seed = *seed;
  return t;
}

RunConfig ParseConfig(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("config: invalid JSON: ") + e.what());
  }
  BMFA_REQUIRE(root.is_object(), "config: top level must be an object");
  for (const auto& item : root.items()) {
    static const std::set<std::string> kSections = {
        "version", "frontend", "data", "model", "train", "eval"};
    BMFA_REQUIRE(kSections.count(item.key()),
                 "config: unknown section '" + item.key() + "'");
  }
  if (root.contains("version")) {
    BMFA_REQUIRE(root["version"].is_number_integer(),
                 "config: version must be an integer");
    BMFA_REQUIRE(root["version"].get<int>() == kConfigVersion,
                 "config: unsupported version " + root["version"].dump());
  }

  RunConfig c;
  Section fe(root, "frontend");
  fe.Get("sample_rate", c.frontend.sample_rate);
  fe.Get("frame_len_ms", c.frontend.frame_len_ms);
  fe.Get("frame_shift_ms", c.frontend.frame_shift_ms);
  fe.Get("n_mels", c.frontend.n_mels);
  fe.Get("low_freq", c.frontend.low_freq);
  fe.Get("high_freq", c.frontend.high_freq);
  fe.Get("preemph", c.frontend.preemph);
  fe.Get("cmn_window_s", c.frontend.cmn_window_s);
  fe.Get("vad_offset", c.frontend.vad_offset);
  fe.Get("apply_vad", c.frontend.apply_vad);
  fe.Get("apply_cmn", c.frontend.apply_cmn);
  fe.Finish();

  Section d(root, "data");
  d.Get("n_speakers", c.data.n_speakers);
  d.Get("utts_per_speaker", c.data.utts_per_speaker);
  d.Get("heldout_per_speaker", c.data.heldout_per_speaker);
  d.Get("min_frames", c.data.min_frames);
  d.Get("max_frames", c.data.max_frames);
  d.Get("template_scale", c.data.template_scale);
  d.Get("noise_scale", c.data.noise_scale);
  d.Get("drift_ratio", c.data.drift_ratio);
  d.Get("min_period", c.data.min_period);
  d.Get("max_period", c.data.max_period);
  d.Get("seed", c.data.seed);
  d.Finish();

  Section m(root, "model");
  std::string strategy = c.model.id.StrategyName();
  m.Get("strategy", strategy);
  std::string fusion = strategy == "baseline" ? "none" : "afm";
  m.Get("fusion", fusion);
  c.model.id = StrategyId::Parse(strategy, fusion);
  m.Get("r", c.model.reduction);
  m.Get("embedding_dim", c.model.embedding_dim);
  m.Get("width", c.model.backbone.width);
  std::vector<int> blocks(c.model.backbone.blocks.begin(),
                          c.model.backbone.blocks.end());
  m.Get("blocks", blocks);
  BMFA_REQUIRE(blocks.size() == 4, "config: model.blocks must have 4 entries");
  for (int i = 0; i < 4; ++i) {
    BMFA_REQUIRE(blocks[i] >= 1, "config: model.blocks entries must be >= 1");
    c.model.backbone.blocks[i] = blocks[i];
  }
  m.Get("lowest_stage", c.model.lowest_stage);
  m.Finish();

  Section t(root, "train");
  t.Get("steps", c.train.steps);
  t.Get("batch", c.train.batch);
  t.Get("crop_frames", c.train.crop_frames);
  t.Get("lr_start", c.train.lr_start);
  t.Get("lr_end", c.train.lr_end);
  t.Get("m", c.train.loss.margin);
  t.Get("s", c.train.loss.scale);
  if (t.Has("seed")) {
    uint64_t seed = 0;
    t.Get("seed", seed);
    c.seed = seed;
  } else {
    t.Get("seed", c.train.seed);
  }
  t.Finish();

  Section e(root, "eval");
  e.Get("p_target", c.eval.p_target);
  e.Get("c_miss", c.eval.c_miss);
  e.Get("c_fa", c.eval.c_fa);
  e.Finish();

  c.Finalize();
  return c;
}

RunConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

std::string ConfigToJson(const RunConfig& config) {
  return ToJson(config).dump(2) + "\n";
}

std::string Fnv1aHex(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string ConfigHash(const RunConfig& config) {
  return Fnv1aHex(ToJson(config).dump());
}

}  // namespace bmfa
