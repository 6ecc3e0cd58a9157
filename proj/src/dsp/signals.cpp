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

#include "dsp/signals.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace cosfuse::dsp::signals {

AudioBuffer sine(double freq_hz, double seconds, int sr, double amplitude, double phase) {
  AudioBuffer a;
  a.sample_rate_hz = sr;
  a.samples.resize(static_cast<std::size_t>(std::lround(seconds * sr)));
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    a.samples[i] = amplitude * std::sin(2.0 * M_PI * freq_hz * i / sr + phase);
  return a;
}

AudioBuffer white_noise(double seconds, std::uint64_t seed, int sr, double stddev) {
  Rng rng(seed);
  AudioBuffer a;
  a.sample_rate_hz = sr;
  a.samples.resize(static_cast<std::size_t>(std::lround(seconds * sr)));
  for (auto& v : a.samples) v = rng.normal(0.0, stddev);
  return a;
}

AudioBuffer mix(const AudioBuffer& a, const AudioBuffer& b) {
  if (a.samples.size() != b.samples.size() || a.sample_rate_hz != b.sample_rate_hz)
    throw Error(ErrorCode::kArgument, "mix requires equal length and rate");
  AudioBuffer out = a;
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += b.samples[i];
  return out;
}

PulseTrain pulse_train(const PulseTrainSpec& s) {
  Rng rng(s.seed);
  PulseTrain out;
  out.audio.sample_rate_hz = s.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::lround(s.seconds * s.sample_rate_hz));
  out.audio.samples.assign(n, 0.0);

  double t = 4.0 * s.pulse_sigma_s;
  for (std::size_t cycle = 0; t < s.seconds - 4.0 * s.pulse_sigma_s; ++cycle) {
    const double sign = (cycle % 2 == 0) ? 1.0 : -1.0;
    double amp = s.amplitude * (1.0 + sign * s.shimmer / 2.0);
    if (s.random_shimmer > 0.0) amp *= 1.0 + s.random_shimmer * rng.uniform(-1.0, 1.0);
    out.pulse_times_s.push_back(t);
    out.amplitudes.push_back(amp);

    double f0 = s.f0_hz;
    if (!s.contour_hz.empty())
      f0 = s.contour_hz[static_cast<std::size_t>(std::floor(t)) % s.contour_hz.size()];
    double period = (1.0 + sign * s.jitter / 2.0) / f0;
    if (s.random_jitter > 0.0) period *= 1.0 + s.random_jitter * rng.uniform(-1.0, 1.0);
    t += period;
  }
  for (std::size_t i = 1; i < out.pulse_times_s.size(); ++i)
    out.periods_s.push_back(out.pulse_times_s[i] - out.pulse_times_s[i - 1]);

  const double sigma = s.pulse_sigma_s * s.sample_rate_hz;
  const long reach = static_cast<long>(std::ceil(5.0 * sigma));
  for (std::size_t p = 0; p < out.pulse_times_s.size(); ++p) {
    const double center = out.pulse_times_s[p] * s.sample_rate_hz;
    const long c = std::lround(center);
    for (long k = std::max(0L, c - reach); k <= std::min<long>(static_cast<long>(n) - 1, c + reach);
         ++k) {
      const double d = (static_cast<double>(k) - center) / sigma;
      out.audio.samples[k] += out.amplitudes[p] * std::exp(-0.5 * d * d);
    }
  }
  return out;
}

void resonate(AudioBuffer& audio, double freq_hz, double bandwidth_hz) {
  const double sr = audio.sample_rate_hz;
  const double r = std::exp(-M_PI * bandwidth_hz / sr);
  const double a1 = 2.0 * r * std::cos(2.0 * M_PI * freq_hz / sr);
  const double a2 = -r * r;
  const double gain = 1.0 - r;
  double y1 = 0.0, y2 = 0.0;
  for (auto& v : audio.samples) {
    const double y = gain * v + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

AudioBuffer vowel(double f0_hz, const std::vector<double>& formants_hz,
                  const std::vector<double>& bandwidths_hz, double seconds, int sr) {
  PulseTrainSpec spec;
  spec.f0_hz = f0_hz;
  spec.seconds = seconds;
  spec.sample_rate_hz = sr;
  spec.pulse_sigma_s = 0.0001;
  AudioBuffer a = pulse_train(spec).audio;
  for (std::size_t i = 0; i < formants_hz.size(); ++i)
    resonate(a, formants_hz[i], i < bandwidths_hz.size() ? bandwidths_hz[i] : 80.0);
  normalize_peak(a, 0.5);
  return a;
}

void normalize_peak(AudioBuffer& audio, double peak) {
  double m = 0.0;
  for (double v : audio.samples) m = std::max(m, std::abs(v));
  if (m <= 0.0) return;
  for (auto& v : audio.samples) v *= peak / m;
}

}  // namespace cosfuse::dsp::signals
