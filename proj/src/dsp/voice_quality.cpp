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
#include <numeric>

#include "dsp/dsp.hpp"

namespace cosfuse::dsp {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population standard deviation.
double stddev_of(std::span<const double> v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

Perturbation compute_jitter(const PitchTrack& track) {
  const auto& p = track.period_s;
  const bool runs = track.period_run.size() == p.size();
  std::vector<double> diffs;
  std::vector<bool> used(p.size(), false);
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (runs && track.period_run[i] != track.period_run[i - 1]) continue;
    if (p[i] <= 0.0 || p[i - 1] <= 0.0) continue;
    const double ratio = std::max(p[i], p[i - 1]) / std::min(p[i], p[i - 1]);
    if (ratio > kMaxPeriodRatio) continue;
    diffs.push_back(std::abs(p[i] - p[i - 1]));
    used[i] = used[i - 1] = true;
  }
  // Three consecutive periods give the first two pairs.
  if (diffs.size() < 2) return {};
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (used[i]) {
      sum += p[i];
      ++count;
    }
  }
  const double mean_period = sum / static_cast<double>(count);
  std::vector<double> rel(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) rel[i] = diffs[i] / mean_period;
  return {mean_of(diffs) / mean_period, stddev_of(rel)};
}

std::vector<double> pulse_amplitudes(const AudioBuffer& audio, const PitchTrack& track) {
  const auto& x = audio.samples;
  const std::size_t n = x.size();
  std::vector<double> amps(track.pulse_index.size(), 0.0);
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const auto k = static_cast<std::size_t>(track.pulse_index[i]);
    const int run = track.pulse_run[i];
    const double pol =
        static_cast<std::size_t>(run) < track.run_polarity.size() ? track.run_polarity[run] : 1.0;
    const double b = pol * x[k];
    if (k == 0 || k + 1 >= n) {
      amps[i] = std::max(b, 0.0);
      continue;
    }
    const double a = pol * x[k - 1];
    const double c = pol * x[k + 1];
    const double denom = a - 2.0 * b + c;
    double delta = 0.0;
    if (denom < 0.0) delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    amps[i] = std::max(b - 0.25 * (a - c) * delta, 0.0);
  }
  return amps;
}

namespace {

Shimmer shimmer_over(std::span<const double> a, std::span<const int> run) {
  std::vector<double> diffs, dbs;
  std::vector<bool> used(a.size(), false);
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (!run.empty() && run[i] != run[i - 1]) continue;
    if (a[i] <= 0.0 || a[i - 1] <= 0.0) continue;
    diffs.push_back(std::abs(a[i] - a[i - 1]));
    dbs.push_back(std::abs(20.0 * std::log10(a[i] / a[i - 1])));
    used[i] = used[i - 1] = true;
  }
  if (diffs.size() < 2) return {};
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (used[i]) {
      sum += a[i];
      ++count;
    }
  }
  return {mean_of(diffs) / (sum / static_cast<double>(count)), mean_of(dbs)};
}

}  // namespace

Shimmer shimmer_from_amplitudes(std::span<const double> amplitudes) {
  return shimmer_over(amplitudes, {});
}

Shimmer compute_shimmer(const AudioBuffer& audio, const PitchTrack& track) {
  const auto amps = pulse_amplitudes(audio, track);
  return shimmer_over(amps, track.pulse_run);
}

double hnr_from_correlation(double r) {
  if (r >= 1.0) return kHnrMaxDb;
  if (r <= 0.0) return kHnrMinDb;
  return std::clamp(10.0 * std::log10(r / (1.0 - r)), kHnrMinDb, kHnrMaxDb);
}

Measure compute_hnr(const AudioBuffer& /*audio*/, const PitchTrack& track) {
  // Voiced frames carry the correlation at the detected period. Without any
  // voiced frame, sounding frames contribute their best in-band correlation.
  std::vector<double> values;
  for (std::size_t i = 0; i < track.voiced.size(); ++i)
    if (track.voiced[i]) values.push_back(hnr_from_correlation(track.strength[i]));
  if (values.empty()) {
    for (std::size_t i = 0; i < track.sounding.size(); ++i)
      if (track.sounding[i]) values.push_back(hnr_from_correlation(track.strength[i]));
  }
  if (values.empty()) return std::nullopt;
  return mean_of(values);
}

Perturbation compute_loudness(const AudioBuffer& audio, const FrameConfig& cfg) {
  cfg.validate();
  const int sr = audio.sample_rate_hz;
  const std::size_t win = cfg.window_samples(sr);
  const std::size_t hop = cfg.hop_samples(sr);
  const std::size_t frames = cfg.frame_count(audio.samples.size(), sr);
  if (frames == 0) return {};
  std::vector<double> rms(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < win; ++k) {
      const double v = audio.samples[i * hop + k];
      acc += v * v;
    }
    rms[i] = std::sqrt(acc / static_cast<double>(win));
  }
  const double ref = percentile(rms, 0.95);
  if (!(ref > 0.0)) return {};
  // Frames more than 60 dB below the reference are silence.
  const double floor = ref * 1e-3;
  std::vector<double> kept;
  for (double r : rms)
    if (r > floor) kept.push_back(r / ref);
  if (kept.empty()) return {};
  return {mean_of(kept), stddev_of(kept)};
}

double hz_to_semitones(double hz) { return 12.0 * std::log2(hz / kSemitoneReferenceHz); }

Perturbation long_relative_f0(const PitchTrack& track) {
  // Mean semitone pitch per 1 s macro-window, with at least 3 voiced frames.
  std::vector<double> sums, counts;
  for (std::size_t i = 0; i < track.voiced.size(); ++i) {
    if (!track.voiced[i]) continue;
    const auto w = static_cast<std::size_t>(std::floor(track.frame_times_s[i] / kMacroWindowS));
    if (w >= sums.size()) {
      sums.resize(w + 1, 0.0);
      counts.resize(w + 1, 0.0);
    }
    sums[w] += hz_to_semitones(track.f0_hz[i]);
    counts[w] += 1.0;
  }
  std::vector<double> windows;
  for (std::size_t w = 0; w < sums.size(); ++w)
    if (counts[w] >= 3.0) windows.push_back(sums[w] / counts[w]);
  if (windows.size() < 2) return {};
  const double reference = median_of(windows);
  std::vector<double> dev(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) dev[i] = std::abs(windows[i] - reference);
  return {mean_of(dev), stddev_of(dev)};
}

}  // namespace cosfuse::dsp
