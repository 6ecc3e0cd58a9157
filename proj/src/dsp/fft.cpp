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

#include <cmath>

#include "common/error.hpp"
#include "dsp/dsp.hpp"

namespace cosfuse::dsp {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw Error(ErrorCode::kArgument, "fft size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

void FrameConfig::validate() const {
  if (!(window_s > 0.0) || !(hop_s > 0.0) || hop_s > window_s)
    throw ConfigError("frame config requires 0 < hop_s <= window_s");
}

std::size_t FrameConfig::window_samples(int sr) const {
  return static_cast<std::size_t>(std::lround(window_s * sr));
}

std::size_t FrameConfig::hop_samples(int sr) const {
  return static_cast<std::size_t>(std::lround(hop_s * sr));
}

std::size_t FrameConfig::frame_count(std::size_t n, int sr) const {
  const std::size_t w = window_samples(sr);
  const std::size_t h = hop_samples(sr);
  if (n < w || w == 0 || h == 0) return 0;
  return (n - w) / h + 1;
}

}  // namespace cosfuse::dsp
