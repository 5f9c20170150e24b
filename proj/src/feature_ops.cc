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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bmfa/frontend.h"
#include "bmfa/text_format.h"

namespace bmfa {
namespace {

void CheckMatrix(const FeatureMatrix& f, const char* op) {
  BMFA_REQUIRE(f.n() == 1 && f.c() == 1,
               std::string(op) + ": expected a (1,1,T,F) feature matrix, got " +
                   f.shape().ToString());
}

}  // namespace

FeatureMatrix SlidingCmn(const FeatureMatrix& f, int window) {
  CheckMatrix(f, "cmn");
  BMFA_REQUIRE(window >= 1, "cmn: window must be >= 1 frame");
  const int frames = f.t();
  const int dims = f.f();
  const int left = window / 2;
  const int right = window - 1 - left;
  FeatureMatrix out(f.shape());
  std::vector<double> mean(dims);
  for (int t = 0; t < frames; ++t) {
    const int lo = std::max(0, t - left);
    const int hi = std::min(frames - 1, t + right);
    std::fill(mean.begin(), mean.end(), 0.0);
    for (int u = lo; u <= hi; ++u) {
      for (int d = 0; d < dims; ++d) mean[d] += f.at(0, 0, u, d);
    }
    const double count = hi - lo + 1;
    for (int d = 0; d < dims; ++d) {
      out.at(0, 0, t, d) =
          static_cast<float>(f.at(0, 0, t, d) - mean[d] / count);
    }
  }
  return out;
}

std::vector<double> FrameLogEnergy(const FeatureMatrix& f) {
  CheckMatrix(f, "vad");
  std::vector<double> e(f.t(), 0.0);
  for (int t = 0; t < f.t(); ++t) {
    for (int d = 0; d < f.f(); ++d) e[t] += f.at(0, 0, t, d);
    e[t] /= f.f();
  }
  return e;
}

std::vector<bool> EnergyVad(const FeatureMatrix& f, double offset) {
  const std::vector<double> e = FrameLogEnergy(f);
  double mean = 0;
  for (double v : e) mean += v;
  mean /= static_cast<double>(e.size());
  std::vector<bool> keep(e.size());
  for (size_t t = 0; t < e.size(); ++t) keep[t] = e[t] > mean + offset;
  return keep;
}

FeatureMatrix ApplyMask(const FeatureMatrix& f, const std::vector<bool>& mask) {
  CheckMatrix(f, "vad");
  BMFA_REQUIRE(mask.size() == static_cast<size_t>(f.t()),
               "vad: mask length differs from frame count");
  const int kept = static_cast<int>(std::count(mask.begin(), mask.end(), true));
  if (kept == 0) {
    throw EmptyAfterVad("vad: every frame was removed (empty after VAD)");
  }
  FeatureMatrix out({1, 1, kept, f.f()});
  int row = 0;
  for (int t = 0; t < f.t(); ++t) {
    if (!mask[t]) continue;
    std::copy_n(&f.at(0, 0, t, 0), f.f(), &out.at(0, 0, row++, 0));
  }
  return out;
}

FeatureMatrix ExtractFeatures(const Waveform& w, const FbankConfig& config) {
  FeatureMatrix f = ComputeFbank(w, config);
  if (config.apply_vad) f = ApplyMask(f, EnergyVad(f, config.vad_offset));
  if (config.apply_cmn) f = SlidingCmn(f, config.CmnWindowFrames());
  return f;
}

ChunkPlan PlanChunks(int frames, Rng& rng) {
  ChunkPlan plan;
  if (frames < kMinChunk) {
    plan.skipped = true;
    return plan;
  }
  constexpr uint64_t kChoices = (kMaxChunk - kMinChunk) / 2 + 1;
  int pos = 0;
  while (frames - pos >= kMinChunk) {
    const int want = kMinChunk + 2 * static_cast<int>(rng() % kChoices);
    const int remaining_even = (frames - pos) & ~1;
    const int len = std::min(want, remaining_even);
    plan.spans.emplace_back(pos, len);
    pos += len;
  }
  return plan;
}

FeatureMatrix SliceFrames(const FeatureMatrix& f, int start, int length) {
  CheckMatrix(f, "slice");
  BMFA_REQUIRE(start >= 0 && length >= 1 && start + length <= f.t(),
               "slice: frame range out of bounds");
  FeatureMatrix out({1, 1, length, f.f()});
  std::copy_n(&f.at(0, 0, start, 0), static_cast<size_t>(length) * f.f(),
              out.data());
  return out;
}

std::vector<ManifestEntry> ReadManifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("manifest: cannot open " + path);
  const std::filesystem::path base =
      std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (SkipTextLine(line, "manifest", path)) continue;
    std::istringstream ss(line);
    ManifestEntry e;
    if (!(ss >> e.utt)) continue;
    std::string extra;
    if (!(ss >> e.speaker >> e.path) || (ss >> extra)) {
      throw FormatError("manifest: " + path + ":" + std::to_string(lineno) +
                        " needs exactly 'utt-id speaker-id path'");
    }
    if (std::filesystem::path(e.path).is_relative()) {
      e.path = (base / e.path).string();
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void WriteManifest(const std::string& path,
                   const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path);
  if (!os) throw FormatError("manifest: cannot write " + path);
  WriteTextHeader(os, "manifest");
  for (const auto& e : entries) {
    os << e.utt << ' ' << e.speaker << ' ' << e.path << '\n';
  }
  if (!os) throw FormatError("manifest: write failed for " + path);
}

}  // namespace bmfa
