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

#ifndef BMFA_CHECKPOINT_H_
#define BMFA_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bmfa/params.h"
#include "bmfa/tensor.h"

namespace bmfa {

// "BMFACKPT1" magic, u32 format version, u32 entry count, then per entry a
// u32 name length, the name bytes, and a BTF1 tensor. Little endian.
inline constexpr char kCheckpointMagic[] = "BMFACKPT1";
inline constexpr uint32_t kCheckpointVersion = 1;

using NamedTensor = std::pair<std::string, Tensor<float>>;

void SaveCheckpoint(const std::string& path,
                    const std::vector<NamedTensor>& entries);
// Throws FormatError on bad magic, a newer version, or truncation.
std::vector<NamedTensor> LoadCheckpoint(const std::string& path);

// Every tensor of the list, in list order.
std::vector<NamedTensor> Snapshot(const ParamList<float>& list);

// Copies entries into the list by name. Every list tensor must be present
// with a matching shape; names in `ignore` may appear without a target.
// Any other unknown name is an error.
void Restore(const std::vector<NamedTensor>& entries,
             const ParamList<float>& list,
             const std::vector<std::string>& ignore = {});

}  // namespace bmfa

#endif  // BMFA_CHECKPOINT_H_
