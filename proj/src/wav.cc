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
#include <cstdint>
#include <cstring>
#include <fstream>

#include "bmfa/frontend.h"

namespace bmfa {
namespace {

uint32_t U32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (uint32_t(p[3]) << 24);
}
uint16_t U16(const unsigned char* p) { return p[0] | (p[1] << 8); }

void PutU32(std::ostream& os, uint32_t v) {
  const char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
  os.write(b, 4);
}
void PutU16(std::ostream& os, uint16_t v) {
  const char b[2] = {char(v), char(v >> 8)};
  os.write(b, 2);
}

}  // namespace

Waveform ReadWav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("wav: " + path + " is not a RIFF/WAVE file");
  }
  Waveform w;
  bool have_fmt = false;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const uint32_t size = U32(hdr + 4);
    const size_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw FormatError("wav: truncated chunk in " + path);
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("wav: short fmt chunk in " + path);
      const unsigned char* f = bytes.data() + body;
      const uint16_t format = U16(f);
      const uint16_t channels = U16(f + 2);
      const uint16_t bits = U16(f + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw FormatError("wav: " + path +
                          " must be mono 16-bit PCM (format " +
                          std::to_string(format) + ", " +
                          std::to_string(channels) + " channels, " +
                          std::to_string(bits) + " bits)");
      }
      w.sample_rate = static_cast<int>(U32(f + 4));
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("wav: data before fmt in " + path);
      const size_t n = size / 2;
      w.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const auto v = static_cast<int16_t>(U16(bytes.data() + body + 2 * i));
        w.samples[i] = static_cast<float>(v / 32768.0);
      }
      if (w.sample_rate <= 0) throw FormatError("wav: bad sample rate");
      if (w.samples.empty()) throw FormatError("wav: no samples in " + path);
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw FormatError("wav: no data chunk in " + path);
}

void WriteWav(const std::string& path, const Waveform& w) {
  BMFA_REQUIRE(w.sample_rate > 0, "wav: sample rate must be positive");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("wav: cannot write " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
  os.write("RIFF", 4);
  PutU32(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  PutU32(os, 16);
  PutU16(os, 1);
  PutU16(os, 1);
  PutU32(os, static_cast<uint32_t>(w.sample_rate));
  PutU32(os, static_cast<uint32_t>(w.sample_rate) * 2);
  PutU16(os, 2);
  PutU16(os, 16);
  os.write("data", 4);
  PutU32(os, data_bytes);
  for (float s : w.samples) {
    const double v = std::clamp(static_cast<double>(s), -1.0, 1.0) * 32767.0;
    PutU16(os, static_cast<uint16_t>(static_cast<int16_t>(std::lround(v))));
  }
  if (!os) throw FormatError("wav: write failed for " + path);
}

}  // namespace bmfa
