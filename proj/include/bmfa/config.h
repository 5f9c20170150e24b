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

#ifndef BMFA_CONFIG_H_
#define BMFA_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>

#include "bmfa/aggregation.h"
#include "bmfa/corpus.h"
#include "bmfa/frontend.h"
#include "bmfa/metrics.h"
#include "bmfa/training.h"

namespace bmfa {

inline constexpr int kConfigVersion = 1;

// One run configuration. JSON sections: frontend, data (synthetic corpus),
// model, train, eval. Every key is optional and defaults to the values
// below; unknown keys are rejected.
struct RunConfig {
  FbankConfig frontend;
  CorpusConfig data;
  ModelConfig model;
  TrainConfig train;
  std::optional<uint64_t> seed;  // train.seed; required by training
  DcfParams eval;

  // Copies the shared feature dimension into data and model and validates
  // every section.
  void Finalize();
  // The training config with the seed filled in; InvalidInput if unset.
  TrainConfig Training() const;
};

// Throws InvalidInput on malformed JSON, wrong value types, unknown keys or
// values that fail validation.
RunConfig ParseConfig(const std::string& text);
RunConfig LoadConfig(const std::string& path);

// Canonical JSON with every field spelled out.
std::string ConfigToJson(const RunConfig& config);

// 64-bit FNV-1a of the canonical JSON, as 16 hex digits.
std::string ConfigHash(const RunConfig& config);
std::string Fnv1aHex(const std::string& bytes);

}  // namespace bmfa

#endif  // BMFA_CONFIG_H_
