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

#include "bmfa/checkpoint.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>

namespace bmfa {
namespace {

constexpr size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

void PutU32(std::ostream& os, uint32_t v) {
  const char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
  os.write(b, 4);
}

uint32_t GetU32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError("checkpoint: truncated file " + path);
  }
  return b[0] | (b[1] << 8) | (b[2] << 16) | (uint32_t(b[3]) << 24);
}

}  // namespace

void SaveCheckpoint(const std::string& path,
                    const std::vector<NamedTensor>& entries) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("checkpoint: cannot write " + path);
  os.write(kCheckpointMagic, kMagicLen);
  PutU32(os, kCheckpointVersion);
  PutU32(os, static_cast<uint32_t>(entries.size()));
  for (const auto& [name, tensor] : entries) {
    PutU32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    WriteTensor(os, tensor);
  }
  if (!os) throw FormatError("checkpoint: write failed for " + path);
}

std::vector<NamedTensor> LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("checkpoint: cannot open " + path);
  char magic[kMagicLen];
  if (!is.read(magic, kMagicLen) ||
      std::memcmp(magic, kCheckpointMagic, kMagicLen) != 0) {
    throw FormatError("checkpoint: " + path + " lacks the BMFACKPT1 magic");
  }
  const uint32_t version = GetU32(is, path);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: " + path + " has format version " +
                      std::to_string(version) + "; this build reads " +
                      std::to_string(kCheckpointVersion));
  }
  const uint32_t count = GetU32(is, path);
  std::vector<NamedTensor> entries;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t len = GetU32(is, path);
    if (len > 4096) throw FormatError("checkpoint: implausible name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) {
      throw FormatError("checkpoint: truncated file " + path);
    }
    entries.emplace_back(std::move(name), ReadTensor<float>(is));
  }
  return entries;
}

std::vector<NamedTensor> Snapshot(const ParamList<float>& list) {
  std::vector<NamedTensor> out;
  for (const auto& ref : list.refs()) out.emplace_back(ref.name, *ref.tensor);
  return out;
}

void Restore(const std::vector<NamedTensor>& entries,
             const ParamList<float>& list,
             const std::vector<std::string>& ignore) {
  std::map<std::string, const Tensor<float>*> by_name;
  for (const auto& [name, tensor] : entries) {
    if (!by_name.emplace(name, &tensor).second) {
      throw FormatError("checkpoint: duplicate entry " + name);
    }
  }
  for (const auto& ref : list.refs()) {
    auto it = by_name.find(ref.name);
    if (it == by_name.end()) {
      throw FormatError("checkpoint: missing entry " + ref.name);
    }
    if (!(it->second->shape() == ref.tensor->shape())) {
      throw FormatError("checkpoint: " + ref.name + " has shape " +
                        it->second->shape().ToString() + ", model expects " +
                        ref.tensor->shape().ToString());
    }
    *ref.tensor = *it->second;
    by_name.erase(it);
  }
  for (const auto& [name, tensor] : by_name) {
    if (std::find(ignore.begin(), ignore.end(), name) == ignore.end()) {
      throw FormatError("checkpoint: entry " + name +
                        " does not belong to this model configuration");
    }
  }
}

}  // namespace bmfa
