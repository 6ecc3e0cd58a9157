// Copyright 2026 The cosfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "common/error.hpp"
#include "dsp/dsp.hpp"

namespace cosfuse::dsp {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t rd32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t rd16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void wr32(std::vector<std::uint8_t>& o, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) o.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void wr16(std::vector<std::uint8_t>& o, std::uint16_t v) {
  o.push_back(static_cast<std::uint8_t>(v));
  o.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

AudioBuffer decode_wav(std::span<const std::uint8_t> b, const std::string& name) {
  auto fail = [&](const std::string& why) -> IoError {
    return IoError("cannot read audio '" + name + "': " + why);
  };
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
      std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint8_t* chunk = b.data() + pos;
    const std::uint32_t size = rd32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(size, b.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw fail("short fmt chunk");
      format = rd16(chunk + 8);
      channels = rd16(chunk + 10);
      rate = rd32(chunk + 12);
      block_align = rd16(chunk + 20);
      bits = rd16(chunk + 22);
      if (format == kFormatExtensible) {
        if (avail < 26) throw fail("short extensible fmt chunk");
        format = rd16(chunk + 8 + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = avail;
    }
    pos = body + size + (size & 1u);
  }
  if (channels == 0 || rate == 0) throw fail("missing fmt chunk");
  if (!data) throw fail("missing data chunk");
  const bool pcm_ok = format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32);
  const bool float_ok = format == kFormatFloat && bits == 32;
  if (!pcm_ok && !float_ok)
    throw fail("unsupported encoding (format " + std::to_string(format) + ", " +
               std::to_string(bits) + " bits)");
  const std::size_t bytes_per = bits / 8;
  if (block_align != bytes_per * channels) throw fail("inconsistent block alignment");

  const std::size_t frames = data_size / block_align;
  AudioBuffer out;
  out.sample_rate_hz = static_cast<int>(rate);
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + i * block_align + c * bytes_per;
      double v = 0.0;
      if (float_ok) {
        float f;
        std::uint32_t u = rd32(p);
        std::memcpy(&f, &u, 4);
        v = f;
      } else if (bits == 8) {
        v = (static_cast<int>(p[0]) - 128) / 128.0;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(rd16(p)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
        if (s & 0x800000) s |= ~0xFFFFFF;
        v = s / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(rd32(p)) / 2147483648.0;
      }
      acc += v;
    }
    out.samples[i] = acc / channels;
    if (!std::isfinite(out.samples[i])) throw fail("non-finite sample");
  }
  if (out.samples.empty()) throw fail("no samples");
  return out;
}

AudioBuffer load_audio(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes, path);
}

std::vector<std::uint8_t> encode_wav16(const AudioBuffer& audio) {
  std::vector<std::uint8_t> o;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  o.insert(o.end(), {'R', 'I', 'F', 'F'});
  wr32(o, 36 + data_bytes);
  o.insert(o.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  wr32(o, 16);
  wr16(o, kFormatPcm);
  wr16(o, 1);
  wr32(o, static_cast<std::uint32_t>(audio.sample_rate_hz));
  wr32(o, static_cast<std::uint32_t>(audio.sample_rate_hz * 2));
  wr16(o, 2);
  wr16(o, 16);
  o.insert(o.end(), {'d', 'a', 't', 'a'});
  wr32(o, data_bytes);
  for (double s : audio.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(std::min(c * 32768.0, 32767.0)));
    wr16(o, static_cast<std::uint16_t>(q));
  }
  return o;
}

void save_wav16(const AudioBuffer& audio, const std::string& path) {
  const auto bytes = encode_wav16(audio);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace cosfuse::dsp
