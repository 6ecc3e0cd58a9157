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

#include "common/error.hpp"
#include "dsp/dsp.hpp"

namespace cosfuse::dsp {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters over FFT bins 0..nfft/2, equally spaced on the mel scale.
std::vector<std::vector<double>> mel_filterbank(int n_mels, std::size_t nfft, int sr) {
  const std::size_t bins = nfft / 2 + 1;
  const double mel_hi = hz_to_mel(sr / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(mel_hi * i / (n_mels + 1));
  std::vector<std::vector<double>> fb(n_mels, std::vector<double>(bins, 0.0));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sr / static_cast<double>(nfft);
      if (f > lo && f < hi) fb[m][k] = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

}  // namespace

std::vector<double> deltas(std::span<const double> in, std::size_t rows, std::size_t cols,
                           int window) {
  std::vector<double> out(rows * cols, 0.0);
  if (rows == 0) return out;
  double norm = 0.0;
  for (int k = 1; k <= window; ++k) norm += 2.0 * k * k;
  auto clamp_row = [&](long r) {
    return static_cast<std::size_t>(std::clamp(r, 0L, static_cast<long>(rows) - 1));
  };
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int k = 1; k <= window; ++k) {
        const double ahead = in[clamp_row(static_cast<long>(t) + k) * cols + c];
        const double behind = in[clamp_row(static_cast<long>(t) - k) * cols + c];
        acc += k * (ahead - behind);
      }
      out[t * cols + c] = acc / norm;
    }
  }
  return out;
}

MfccMatrix compute_mfcc39(const AudioBuffer& audio, const FrameConfig& cfg, const MfccConfig& mc) {
  cfg.validate();
  if (mc.n_ceps * 3 != static_cast<int>(MfccMatrix::kCols))
    throw ConfigError("MFCC-39 needs 13 base coefficients");
  const int sr = audio.sample_rate_hz;
  const std::size_t win = cfg.window_samples(sr);
  const std::size_t hop = cfg.hop_samples(sr);
  const std::size_t frames = cfg.frame_count(audio.samples.size(), sr);
  const std::size_t nfft = next_pow2(win);
  const auto fb = mel_filterbank(mc.n_mels, nfft, sr);
  const std::size_t ceps = static_cast<std::size_t>(mc.n_ceps);

  std::vector<double> hann(win);
  for (std::size_t i = 0; i < win; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / static_cast<double>(win));

  // Orthonormal DCT-II rows 1..n_ceps-1.
  std::vector<std::vector<double>> dct(ceps, std::vector<double>(mc.n_mels));
  for (std::size_t c = 0; c < ceps; ++c)
    for (int m = 0; m < mc.n_mels; ++m)
      dct[c][m] = std::sqrt(2.0 / mc.n_mels) * std::cos(M_PI * c * (m + 0.5) / mc.n_mels);

  std::vector<double> base(frames * ceps, 0.0);
  std::vector<std::complex<double>> buf(nfft);
  std::vector<double> logmel(mc.n_mels);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* x = audio.samples.data() + t * hop;
    double energy = 0.0;
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    for (std::size_t i = 0; i < win; ++i) {
      energy += x[i] * x[i];
      buf[i] = x[i] * hann[i];
    }
    fft(buf);
    for (int m = 0; m < mc.n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < fb[m].size(); ++k)
        if (fb[m][k] > 0.0) e += fb[m][k] * std::norm(buf[k]);
      logmel[m] = std::log(std::max(e, mc.energy_floor));
    }
    base[t * ceps] = std::log(std::max(energy, mc.energy_floor));
    for (std::size_t c = 1; c < ceps; ++c) {
      double acc = 0.0;
      for (int m = 0; m < mc.n_mels; ++m) acc += dct[c][m] * logmel[m];
      base[t * ceps + c] = acc;
    }
  }

  const auto d1 = deltas(base, frames, ceps, mc.delta_window);
  const auto d2 = deltas(d1, frames, ceps, mc.delta_window);
  MfccMatrix out;
  out.rows = frames;
  out.values.resize(frames * MfccMatrix::kCols);
  out.frame_times_s.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    out.frame_times_s[t] = (static_cast<double>(t * hop) + win / 2.0) / sr;
    for (std::size_t c = 0; c < ceps; ++c) {
      out.values[t * 39 + c] = base[t * ceps + c];
      out.values[t * 39 + ceps + c] = d1[t * ceps + c];
      out.values[t * 39 + 2 * ceps + c] = d2[t * ceps + c];
    }
  }
  return out;
}

}  // namespace cosfuse::dsp
