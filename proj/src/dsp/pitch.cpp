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

#include "dsp/dsp.hpp"

namespace cosfuse::dsp {

namespace {

struct Peak {
  double lag = 0.0;
  double value = 0.0;
};

// Vertex of the parabola through (−1, a), (0, b), (1, c).
Peak parabolic(double a, double b, double c, double center) {
  const double denom = a - 2.0 * b + c;
  double delta = 0.0;
  if (denom < 0.0) delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  return {center + delta, b - 0.25 * (a - c) * delta};
}

// Normalized autocorrelation r(τ) = Σ x[n]x[n+τ] / sqrt(Σ x[n]^2 · Σ x[n+τ]^2)
// over the overlapping part, for τ in [0, max_lag].
std::vector<double> normalized_autocorrelation(std::span<const double> seg, std::size_t max_lag) {
  const std::size_t n = seg.size();
  double mean = 0.0;
  for (double v : seg) mean += v;
  mean /= static_cast<double>(n);

  const std::size_t nfft = next_pow2(2 * n);
  std::vector<std::complex<double>> buf(nfft);
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = seg[i] - mean;
    buf[i] = v;
    prefix[i + 1] = prefix[i] + v * v;
  }
  fft(buf);
  for (auto& z : buf) z = std::norm(z);
  fft(buf, true);

  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag && lag < n; ++lag) {
    const double e0 = prefix[n - lag];
    const double e1 = prefix[n] - prefix[lag];
    const double denom = std::sqrt(e0 * e1);
    r[lag] = denom > 0.0 ? buf[lag].real() / denom : 0.0;
  }
  return r;
}

}  // namespace

std::size_t PitchTrack::voiced_count() const {
  return static_cast<std::size_t>(std::count(voiced.begin(), voiced.end(), true));
}

PitchTrack estimate_f0(const AudioBuffer& audio, const FrameConfig& cfg, const PitchConfig& pc) {
  cfg.validate();
  const int sr = audio.sample_rate_hz;
  const auto& x = audio.samples;
  const std::size_t n = x.size();
  const std::size_t win = cfg.window_samples(sr);
  const std::size_t hop = cfg.hop_samples(sr);
  const std::size_t frames = cfg.frame_count(n, sr);

  const std::size_t min_lag = static_cast<std::size_t>(std::floor(sr / pc.max_hz));
  const std::size_t max_lag = static_cast<std::size_t>(std::ceil(sr / pc.min_hz));
  // At least two periods of the lowest pitch fit in the analysis window.
  const std::size_t analysis = std::max(win, 2 * max_lag);

  double global_peak = 0.0;
  for (double v : x) global_peak = std::max(global_peak, std::abs(v));

  PitchTrack t;
  t.frame_times_s.resize(frames);
  t.f0_hz.assign(frames, 0.0);
  t.voiced.assign(frames, false);
  t.sounding.assign(frames, false);
  t.strength.assign(frames, 0.0);

  for (std::size_t i = 0; i < frames; ++i) {
    const std::size_t center = i * hop + win / 2;
    t.frame_times_s[i] = static_cast<double>(center) / sr;
    const std::size_t lo = center > analysis / 2 ? center - analysis / 2 : 0;
    const std::size_t hi = std::min(n, lo + analysis);
    std::span<const double> seg(x.data() + lo, hi - lo);

    double frame_peak = 0.0;
    for (double v : seg) frame_peak = std::max(frame_peak, std::abs(v));
    if (global_peak <= 0.0 || frame_peak < pc.silence_threshold * global_peak) continue;
    t.sounding[i] = true;

    const std::size_t lag_hi = std::min(max_lag, seg.size() / 2);
    if (lag_hi <= min_lag + 1) continue;
    const auto r = normalized_autocorrelation(seg, lag_hi + 1);

    Peak best;
    double best_score = -1e300;
    double band_max = 0.0;
    for (std::size_t lag = std::max<std::size_t>(min_lag, 2); lag <= lag_hi; ++lag) {
      band_max = std::max(band_max, r[lag]);
      if (!(r[lag] >= r[lag - 1] && r[lag] > r[lag + 1])) continue;
      const Peak p = parabolic(r[lag - 1], r[lag], r[lag + 1], static_cast<double>(lag));
      const double hz = sr / p.lag;
      if (hz < pc.min_hz || hz > pc.max_hz) continue;
      const double score = p.value - pc.octave_cost * std::log2(p.lag / static_cast<double>(min_lag));
      if (score > best_score) {
        best_score = score;
        best = p;
      }
    }
    if (best.lag <= 0.0) {
      t.strength[i] = band_max;
      continue;
    }
    t.strength[i] = best.value;
    if (best.value >= pc.voicing_threshold) {
      t.voiced[i] = true;
      t.f0_hz[i] = sr / best.lag;
    }
  }

  // Pulse marks within each run of voiced frames.
  int run = 0;
  for (std::size_t a = 0; a < frames;) {
    if (!t.voiced[a]) {
      ++a;
      continue;
    }
    std::size_t b = a;
    while (b + 1 < frames && t.voiced[b + 1]) ++b;

    const std::size_t first_center = a * hop + win / 2;
    const std::size_t last_center = b * hop + win / 2;
    const std::size_t s0 = first_center > hop / 2 ? first_center - hop / 2 : 0;
    const std::size_t s1 = std::min(n, last_center + hop / 2 + 1);
    auto period_at = [&](std::size_t pos) {
      const double rel = (static_cast<double>(pos) - static_cast<double>(first_center)) / hop;
      const auto j = static_cast<std::size_t>(
          std::clamp(std::lround(rel), 0L, static_cast<long>(b - a)));
      return sr / t.f0_hz[a + j];
    };

    double pos_max = 0.0, neg_max = 0.0;
    for (std::size_t k = s0; k < s1; ++k) {
      pos_max = std::max(pos_max, x[k]);
      neg_max = std::max(neg_max, -x[k]);
    }
    const double polarity = pos_max >= neg_max ? 1.0 : -1.0;
    t.run_polarity.push_back(polarity);
    auto argmax = [&](std::size_t lo, std::size_t hi) {
      std::size_t best = lo;
      for (std::size_t k = lo; k <= hi; ++k)
        if (polarity * x[k] > polarity * x[best]) best = k;
      return best;
    };
    auto add_pulse = [&](std::size_t k) {
      double frac = 0.0;
      if (k > 0 && k + 1 < n)
        frac = parabolic(polarity * x[k - 1], polarity * x[k], polarity * x[k + 1], 0.0).lag;
      t.pulse_index.push_back(static_cast<std::int64_t>(k));
      t.pulse_frac.push_back(frac);
      t.pulse_run.push_back(run);
    };

    const std::size_t first_hi =
        std::min(s1 - 1, s0 + static_cast<std::size_t>(std::lround(period_at(s0))));
    auto is_peak = [&](std::size_t k) {
      const double v = polarity * x[k];
      return (k == 0 || polarity * x[k - 1] <= v) && (k + 1 >= n || polarity * x[k + 1] <= v);
    };
    std::size_t k = argmax(s0, first_hi);
    while (!is_peak(k)) {
      if (k > 0 && polarity * x[k - 1] > polarity * x[k]) {
        --k;
      } else {
        ++k;
      }
    }
    add_pulse(k);
    for (;;) {
      const double period = period_at(k);
      const std::size_t lo = k + static_cast<std::size_t>(std::lround(0.8 * period));
      if (lo >= s1) break;
      const std::size_t hi = std::min(s1 - 1, k + static_cast<std::size_t>(std::lround(1.2 * period)));
      k = argmax(lo, hi);
      // A maximum on the window edge is a slope, not a pulse.
      if (!is_peak(k)) break;
      add_pulse(k);
    }
    ++run;
    a = b + 1;
  }
  for (std::size_t i = 1; i < t.pulse_index.size(); ++i) {
    if (t.pulse_run[i] != t.pulse_run[i - 1]) continue;
    const double samples = static_cast<double>(t.pulse_index[i] - t.pulse_index[i - 1]) +
                           (t.pulse_frac[i] - t.pulse_frac[i - 1]);
    t.period_s.push_back(samples / sr);
    t.period_run.push_back(t.pulse_run[i]);
  }
  return t;
}

}  // namespace cosfuse::dsp
