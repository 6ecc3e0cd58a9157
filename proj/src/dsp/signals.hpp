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

#include <cstdint>
#include <vector>

#include "dsp/dsp.hpp"

namespace cosfuse::dsp::signals {

AudioBuffer sine(double freq_hz, double seconds, int sample_rate_hz = 48000,
                 double amplitude = 0.5, double phase = 0.0);

AudioBuffer white_noise(double seconds, std::uint64_t seed, int sample_rate_hz = 48000,
                        double stddev = 0.1);

// Adds a + b sample-wise (lengths must match).
AudioBuffer mix(const AudioBuffer& a, const AudioBuffer& b);

struct PulseTrainSpec {
  double f0_hz = 200.0;
  double seconds = 1.0;
  int sample_rate_hz = 48000;
  double amplitude = 0.5;
  // Alternating perturbations: periods T0(1 ± jitter/2), amplitudes A(1 ± shimmer/2),
  // so consecutive differences are exactly jitter·T0 and shimmer·A.
  double jitter = 0.0;
  double shimmer = 0.0;
  // Optional i.i.d. relative perturbations drawn per cycle.
  double random_jitter = 0.0;
  double random_shimmer = 0.0;
  std::uint64_t seed = 0;
  // Gaussian pulse width (standard deviation).
  double pulse_sigma_s = 0.00025;
  // Piecewise pitch contour: if non-empty, f0 for second s is contour[s % size].
  std::vector<double> contour_hz;
};

struct PulseTrain {
  AudioBuffer audio;
  std::vector<double> pulse_times_s;
  std::vector<double> periods_s;
  std::vector<double> amplitudes;
};

// Gaussian pulses placed at exact (fractional) times.
PulseTrain pulse_train(const PulseTrainSpec& spec);

// Two-pole resonator (unit gain at DC is not enforced).
void resonate(AudioBuffer& audio, double freq_hz, double bandwidth_hz);

// Pulse source at f0 shaped by resonators at the given formant frequencies.
AudioBuffer vowel(double f0_hz, const std::vector<double>& formants_hz,
                  const std::vector<double>& bandwidths_hz, double seconds,
                  int sample_rate_hz = 48000);

void normalize_peak(AudioBuffer& audio, double peak);

}  // namespace cosfuse::dsp::signals
