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

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cosfuse::dsp {

// A feature that could not be measured (too few periods, silence, ...).
// nullopt is the undefined marker; it is never conflated with 0.
using Measure = std::optional<double>;

struct AudioBuffer {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  int sample_rate_hz = 48000;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

// Reads RIFF/WAVE PCM (8/16/24/32-bit integer, 32-bit float, also
// WAVE_FORMAT_EXTENSIBLE). Multi-channel input is averaged to mono.
AudioBuffer load_audio(const std::string& path);
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>");
// Writes 16-bit PCM mono; samples are clipped to [-1, 1].
void save_wav16(const AudioBuffer& audio, const std::string& path);
std::vector<std::uint8_t> encode_wav16(const AudioBuffer& audio);

struct FrameConfig {
  double window_s = 0.025;
  double hop_s = 0.010;

  void validate() const;
  std::size_t window_samples(int sample_rate_hz) const;
  std::size_t hop_samples(int sample_rate_hz) const;
  // floor((n - window) / hop) + 1, or 0 when n < window.
  std::size_t frame_count(std::size_t n, int sample_rate_hz) const;
};

struct PitchConfig {
  double min_hz = 75.0;
  double max_hz = 600.0;
  double voicing_threshold = 0.45;
  // Autocorrelation peaks at longer lags are penalized by this much per octave.
  double octave_cost = 0.03;
  // Frames whose peak amplitude is below this fraction of the global peak are silent.
  double silence_threshold = 0.03;
};

struct PitchTrack {
  std::vector<double> frame_times_s;
  std::vector<double> f0_hz;     // 0 where unvoiced
  std::vector<bool> voiced;
  std::vector<bool> sounding;    // frame above the silence threshold
  std::vector<double> strength;  // normalized autocorrelation at the selected lag (0 if silent)

  // Glottal pulse marks: integer sample index plus fractional offset, and the
  // voiced run each pulse belongs to.
  std::vector<std::int64_t> pulse_index;
  std::vector<double> pulse_frac;
  std::vector<int> pulse_run;
  std::vector<double> run_polarity;  // +1 or -1 per run

  // Durations between consecutive pulses of the same run, with the run id.
  std::vector<double> period_s;
  std::vector<int> period_run;

  std::size_t voiced_count() const;
};

PitchTrack estimate_f0(const AudioBuffer& audio, const FrameConfig& cfg = {},
                       const PitchConfig& pitch = {});

struct Perturbation {
  Measure mean;
  Measure stddev;
};

// local jitter = mean |T_i - T_{i-1}| / mean T over consecutive periods of the
// same run. Pairs whose ratio exceeds max_period_ratio are skipped.
inline constexpr double kMaxPeriodRatio = 1.3;
Perturbation compute_jitter(const PitchTrack& track);

struct Shimmer {
  Measure local;  // ratio
  Measure local_db;
};

// Peak amplitude at each pulse mark, measured on the waveform.
std::vector<double> pulse_amplitudes(const AudioBuffer& audio, const PitchTrack& track);
Shimmer compute_shimmer(const AudioBuffer& audio, const PitchTrack& track);
// Same statistics for an explicit amplitude sequence (single run).
Shimmer shimmer_from_amplitudes(std::span<const double> amplitudes);

inline constexpr double kHnrMinDb = -20.0;
inline constexpr double kHnrMaxDb = 60.0;
double hnr_from_correlation(double r);
Measure compute_hnr(const AudioBuffer& audio, const PitchTrack& track);

Perturbation compute_loudness(const AudioBuffer& audio, const FrameConfig& cfg = {});

struct LpcConfig {
  int order = 12;
  int working_rate_hz = 10000;
  double pre_emphasis = 0.97;
  double window_s = 0.025;
  double min_hz = 200.0;
  double max_hz = 1200.0;
  double max_bandwidth_hz = 700.0;
};

// Rational polyphase resampler with a Kaiser-windowed sinc low-pass.
std::vector<double> resample(std::span<const double> x, int from_hz, int to_hz);
// Autocorrelation-method LPC; returns a[0..order] with a[0] = 1.
std::vector<double> lpc(std::span<const double> frame, int order);
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs);

struct Resonance {
  double frequency_hz;
  double bandwidth_hz;
};
std::vector<Resonance> lpc_resonances(std::span<const double> a, int sample_rate_hz);

Measure estimate_f1_formant(const AudioBuffer& audio, const PitchTrack& track,
                            const FrameConfig& cfg = {}, const LpcConfig& lpc_cfg = {});

inline constexpr double kMacroWindowS = 1.0;
Perturbation long_relative_f0(const PitchTrack& track);

struct MfccConfig {
  int n_mels = 26;
  int n_ceps = 13;
  int delta_window = 2;
  double energy_floor = 1e-10;
};

struct MfccMatrix {
  std::size_t rows = 0;
  static constexpr std::size_t kCols = 39;
  std::vector<double> values;  // row-major rows x 39
  std::vector<double> frame_times_s;

  double at(std::size_t r, std::size_t c) const { return values[r * kCols + c]; }
};

// Regression deltas over +-window frames with edge replication; in is rows x cols row-major.
std::vector<double> deltas(std::span<const double> in, std::size_t rows, std::size_t cols,
                           int window);
MfccMatrix compute_mfcc39(const AudioBuffer& audio, const FrameConfig& cfg = {},
                          const MfccConfig& mcfg = {});

struct ProsodicProfile {
  Measure mean_f0;  // semitones re 100 Hz
  Measure stddev_f0;
  Measure mean_loudness;
  Measure stddev_loudness;
  Measure local_shimmer_mean;
  Measure local_db_shimmer;
  Measure hnr_db;
  Measure f1_frequency_hz;
  Measure local_jitter_mean;
  Measure local_jitter_stddev;
  Measure long_rel_f0_mean;
  Measure long_rel_f0_stddev;
  Measure mean_f0_hz;
  Measure stddev_f0_hz;

  static constexpr std::size_t kFieldCount = 14;
  static const std::vector<std::string>& field_names();
  std::vector<Measure> fields() const;
  static ProsodicProfile from_fields(std::span<const Measure> values);
};

inline constexpr double kSemitoneReferenceHz = 100.0;
double hz_to_semitones(double hz);

ProsodicProfile prosodic_profile(const AudioBuffer& audio, const FrameConfig& cfg = {});

// Profile CSV: sample_id then one column per field name; undefined = empty cell.
std::string profiles_to_csv(const std::vector<std::pair<std::string, ProsodicProfile>>& rows);
std::vector<std::pair<std::string, ProsodicProfile>> profiles_from_csv(const std::string& path);

// Radix-2 FFT in place; size must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse = false);
std::size_t next_pow2(std::size_t n);

}  // namespace cosfuse::dsp
