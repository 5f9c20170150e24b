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

#ifndef BMFA_FRONTEND_H_
#define BMFA_FRONTEND_H_

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "bmfa/params.h"
#include "bmfa/tensor.h"

namespace bmfa {

struct Waveform {
  std::vector<float> samples;  // in [-1, 1]
  int sample_rate = 16000;
};

// Mono 16-bit PCM WAV.
Waveform ReadWav(const std::string& path);
void WriteWav(const std::string& path, const Waveform& w);

// A feature matrix is a (1, 1, T, n_mels) tensor, one row per frame.
using FeatureMatrix = Tensor<float>;

struct FbankConfig {
  int sample_rate = 16000;
  double frame_len_ms = 25.0;
  double frame_shift_ms = 10.0;
  int n_mels = 64;
  double low_freq = 20.0;
  double high_freq = 0.0;  // <= 0 means Nyquist
  double preemph = 0.97;
  double cmn_window_s = 3.0;
  double vad_offset = 0.0;
  bool apply_vad = true;
  bool apply_cmn = true;

  int FrameSamples() const;
  int ShiftSamples() const;
  int FftSize() const;  // next power of two >= FrameSamples()
  int CmnWindowFrames() const;
  double HighFreq() const;
  void Validate() const;
};

inline constexpr double kLogFloor = 1e-10;

// In-place iterative radix-2 FFT; the size must be a power of two.
void Fft(std::vector<std::complex<double>>& a);

// Triangular filters on the mel scale (1127 ln(1 + f/700)), equally spaced
// between the edge frequencies, applied to power-spectrum bins 0..fft/2.
class MelFilterbank {
 public:
  MelFilterbank(int n_mels, int fft_size, int sample_rate, double low_hz,
                double high_hz);
  std::vector<double> Apply(const std::vector<double>& power) const;
  double CenterHz(int bin) const { return centers_hz_[bin]; }
  int size() const { return static_cast<int>(filters_.size()); }

  static double HzToMel(double hz);
  static double MelToHz(double mel);

 private:
  struct Filter {
    int first = 0;
    std::vector<double> weights;
  };
  std::vector<Filter> filters_;
  std::vector<double> centers_hz_;
};

// Log-mel energies: pre-emphasis, Hamming window, power spectrum, mel
// filterbank, natural log floored at kLogFloor. Frames are taken without
// padding (frames = 1 + (samples - frame_len) / shift).
FeatureMatrix ComputeFbank(const Waveform& w, const FbankConfig& config);

// Subtracts from each frame the per-dimension mean of a centered window of
// `window` frames, truncated at the utterance edges.
FeatureMatrix SlidingCmn(const FeatureMatrix& f, int window);

// Per-frame energy: mean over mel bins of the log-mel features.
std::vector<double> FrameLogEnergy(const FeatureMatrix& f);

// Keeps frames whose energy exceeds the utterance mean energy + offset.
std::vector<bool> EnergyVad(const FeatureMatrix& f, double offset);

// Row deletion; throws EmptyAfterVad when no frame survives.
FeatureMatrix ApplyMask(const FeatureMatrix& f, const std::vector<bool>& mask);

class EmptyAfterVad : public InvalidInput {
 public:
  explicit EmptyAfterVad(const std::string& what) : InvalidInput(what) {}
};

// Full pipeline for one utterance: fbank, VAD on raw energies, then CMN.
FeatureMatrix ExtractFeatures(const Waveform& w, const FbankConfig& config);

inline constexpr int kMinChunk = 200;
inline constexpr int kMaxChunk = 400;

struct ChunkPlan {
  bool skipped = false;  // utterance shorter than kMinChunk
  std::vector<std::pair<int, int>> spans;  // (start, length)
};

// Consecutive disjoint chunks with even lengths drawn uniformly from
// [200, 400]; a chunk is cut short to the remaining even length when that
// remainder is at least 200, and a trailing remainder below 200 is dropped.
ChunkPlan PlanChunks(int frames, Rng& rng);

// Frames [start, start + length) of f.
FeatureMatrix SliceFrames(const FeatureMatrix& f, int start, int length);

struct ManifestEntry {
  std::string utt;
  std::string speaker;
  std::string path;
};

// One "utt-id speaker-id path" line per utterance. Relative paths are
// resolved against the manifest's directory on read.
std::vector<ManifestEntry> ReadManifest(const std::string& path);
void WriteManifest(const std::string& path,
                   const std::vector<ManifestEntry>& entries);

}  // namespace bmfa

#endif  // BMFA_FRONTEND_H_
