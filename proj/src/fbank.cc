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
#include <cmath>
#include <numbers>

#include "bmfa/frontend.h"

namespace bmfa {

int FbankConfig::FrameSamples() const {
  return static_cast<int>(std::lround(sample_rate * frame_len_ms / 1000.0));
}

int FbankConfig::ShiftSamples() const {
  return static_cast<int>(std::lround(sample_rate * frame_shift_ms / 1000.0));
}

int FbankConfig::FftSize() const {
  int n = 1;
  while (n < FrameSamples()) n <<= 1;
  return n;
}

int FbankConfig::CmnWindowFrames() const {
  return std::max(1, static_cast<int>(std::lround(cmn_window_s * 1000.0 /
                                                  frame_shift_ms)));
}

double FbankConfig::HighFreq() const {
  return high_freq > 0 ? high_freq : sample_rate / 2.0;
}

void FbankConfig::Validate() const {
  BMFA_REQUIRE(sample_rate == 8000 || sample_rate == 16000,
               "fbank: sample rate must be 8000 or 16000, got " +
                   std::to_string(sample_rate));
  BMFA_REQUIRE(n_mels == 64, "fbank: n_mels must be 64");
  BMFA_REQUIRE(frame_shift_ms > 0 && frame_len_ms > frame_shift_ms,
               "fbank: need frame_len_ms > frame_shift_ms > 0");
  BMFA_REQUIRE(low_freq >= 0 && low_freq < HighFreq() &&
                   HighFreq() <= sample_rate / 2.0,
               "fbank: mel edges must satisfy 0 <= low < high <= Nyquist");
  BMFA_REQUIRE(preemph >= 0 && preemph < 1, "fbank: preemph in [0, 1)");
  BMFA_REQUIRE(cmn_window_s > 0, "fbank: cmn_window_s must be positive");
}

void Fft(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  BMFA_REQUIRE(n >= 1 && (n & (n - 1)) == 0, "fft: size must be a power of 2");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (size_t i = 0; i < n; i += len) {
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w(std::cos(ang * k), std::sin(ang * k));
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

double MelFilterbank::HzToMel(double hz) {
  return 1127.0 * std::log(1.0 + hz / 700.0);
}

double MelFilterbank::MelToHz(double mel) {
  return 700.0 * (std::exp(mel / 1127.0) - 1.0);
}

MelFilterbank::MelFilterbank(int n_mels, int fft_size, int sample_rate,
                             double low_hz, double high_hz) {
  BMFA_REQUIRE(n_mels >= 1 && fft_size >= 2 && low_hz < high_hz,
               "mel: invalid filterbank geometry");
  const double lo = HzToMel(low_hz);
  const double hi = HzToMel(high_hz);
  const double step = (hi - lo) / (n_mels + 1);
  const int bins = fft_size / 2 + 1;
  for (int m = 0; m < n_mels; ++m) {
    const double left = lo + m * step;
    const double center = left + step;
    const double right = center + step;
    centers_hz_.push_back(MelToHz(center));
    Filter filter;
    filter.first = -1;
    for (int b = 0; b < bins; ++b) {
      const double mel =
          HzToMel(static_cast<double>(b) * sample_rate / fft_size);
      double w = 0;
      if (mel > left && mel <= center) {
        w = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        w = (right - mel) / (right - center);
      }
      if (w <= 0) {
        if (filter.first >= 0) break;
        continue;
      }
      if (filter.first < 0) filter.first = b;
      filter.weights.push_back(w);
    }
    if (filter.first < 0) filter.first = 0;
    filters_.push_back(std::move(filter));
  }
}

std::vector<double> MelFilterbank::Apply(
    const std::vector<double>& power) const {
  std::vector<double> out(filters_.size(), 0.0);
  for (size_t m = 0; m < filters_.size(); ++m) {
    const Filter& f = filters_[m];
    double acc = 0;
    for (size_t k = 0; k < f.weights.size(); ++k) {
      acc += f.weights[k] * power[f.first + k];
    }
    out[m] = acc;
  }
  return out;
}

FeatureMatrix ComputeFbank(const Waveform& w, const FbankConfig& config) {
  config.Validate();
  BMFA_REQUIRE(w.sample_rate == config.sample_rate,
               "fbank: waveform rate " + std::to_string(w.sample_rate) +
                   " differs from configured " +
                   std::to_string(config.sample_rate));
  const int len = config.FrameSamples();
  const int shift = config.ShiftSamples();
  const int samples = static_cast<int>(w.samples.size());
  BMFA_REQUIRE(samples >= len,
               "fbank: waveform of " + std::to_string(samples) +
                   " samples is shorter than one frame (" +
                   std::to_string(len) + ")");
  const int frames = 1 + (samples - len) / shift;
  const int fft = config.FftSize();
  const MelFilterbank bank(config.n_mels, fft, config.sample_rate,
                           config.low_freq, config.HighFreq());
  std::vector<double> window(len);
  for (int i = 0; i < len; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (len - 1));
  }
  FeatureMatrix out({1, 1, frames, config.n_mels});
  std::vector<double> frame(len);
  std::vector<std::complex<double>> spec(fft);
  std::vector<double> power(fft / 2 + 1);
  for (int t = 0; t < frames; ++t) {
    const float* src = w.samples.data() + static_cast<size_t>(t) * shift;
    for (int i = 0; i < len; ++i) frame[i] = src[i];
    for (int i = len - 1; i > 0; --i) frame[i] -= config.preemph * frame[i - 1];
    frame[0] -= config.preemph * frame[0];
    std::fill(spec.begin(), spec.end(), std::complex<double>(0, 0));
    for (int i = 0; i < len; ++i) spec[i] = frame[i] * window[i];
    Fft(spec);
    for (int b = 0; b <= fft / 2; ++b) power[b] = std::norm(spec[b]);
    const std::vector<double> mel = bank.Apply(power);
    for (int m = 0; m < config.n_mels; ++m) {
      out.at(0, 0, t, m) =
          static_cast<float>(std::log(std::max(mel[m], kLogFloor)));
    }
  }
  return out;
}

}  // namespace bmfa
