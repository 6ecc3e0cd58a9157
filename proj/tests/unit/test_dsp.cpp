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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "dsp/dsp.hpp"
#include "dsp/signals.hpp"

using namespace cosfuse;
using namespace cosfuse::dsp;

namespace {

// Relative mean absolute consecutive difference, computed directly.
double rel_mean_abs_diff(const std::vector<double>& v) {
  double d = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) d += std::abs(v[i] - v[i - 1]);
  d /= static_cast<double>(v.size() - 1);
  return d / (std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()));
}

AudioBuffer sine_plus_noise(double snr_db, std::uint64_t seed) {
  const double signal_power = 0.5 * 0.5 * 0.5;  // amplitude 0.5
  const double noise_sd = std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
  return signals::mix(signals::sine(220.0, 1.0), signals::white_noise(1.0, seed, 48000, noise_sd));
}

void put_u16(std::vector<std::uint8_t>& b, unsigned v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}
void put_u32(std::vector<std::uint8_t>& b, unsigned v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

}  // namespace

TEST_CASE("fft matches a naive DFT and inverts") {
  Rng rng(3);
  std::vector<std::complex<double>> x(64);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  auto y = x;
  fft(y);
  for (std::size_t k = 0; k < x.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n)
      acc += x[n] * std::polar(1.0, -2.0 * M_PI * static_cast<double>(k * n) / 64.0);
    CHECK(std::abs(acc - y[k]) < 1e-9);
  }
  fft(y, true);
  for (std::size_t n = 0; n < x.size(); ++n) CHECK(std::abs(y[n] - x[n]) < 1e-12);
  CHECK(next_pow2(1) == 1);
  CHECK(next_pow2(1200) == 2048);
}

TEST_CASE("16-bit WAV round-trips within one quantization step") {
  const AudioBuffer a = signals::sine(440.0, 0.1, 16000, 0.7);
  const auto bytes = encode_wav16(a);
  CHECK(bytes.size() == 44 + 2 * a.samples.size());
  CHECK(std::memcmp(bytes.data(), "RIFF", 4) == 0);
  const AudioBuffer b = decode_wav(bytes);
  CHECK(b.sample_rate_hz == 16000);
  REQUIRE(b.samples.size() == a.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(std::abs(a.samples[i] - b.samples[i]) <= 1.0 / 32767);

  const auto path = (std::filesystem::temp_directory_path() / "cosfuse_test_dsp.wav").string();
  save_wav16(a, path);
  CHECK(load_audio(path).samples == b.samples);
}

TEST_CASE("stereo float WAV is averaged to mono") {
  // Hand-assembled header: format 3 (IEEE float), 2 channels, 8 kHz.
  const float frames[3][2] = {{0.5f, -0.5f}, {1.0f, 0.0f}, {0.25f, 0.75f}};
  std::vector<std::uint8_t> b;
  auto tag = [&](const char* s) { b.insert(b.end(), s, s + 4); };
  tag("RIFF");
  put_u32(b, 36 + 24);
  tag("WAVE");
  tag("fmt ");
  put_u32(b, 16);
  put_u16(b, 3);
  put_u16(b, 2);
  put_u32(b, 8000);
  put_u32(b, 8000 * 8);
  put_u16(b, 8);
  put_u16(b, 32);
  tag("data");
  put_u32(b, 24);
  const auto* p = reinterpret_cast<const std::uint8_t*>(frames);
  b.insert(b.end(), p, p + 24);
  const AudioBuffer a = decode_wav(b);
  CHECK(a.sample_rate_hz == 8000);
  REQUIRE(a.samples.size() == 3);
  CHECK(a.samples[0] == doctest::Approx(0.0));
  CHECK(a.samples[1] == doctest::Approx(0.5));
  CHECK(a.samples[2] == doctest::Approx(0.5));

  b.resize(20);
  CHECK_THROWS_AS(decode_wav(b), IoError);
  CHECK_THROWS_AS(load_audio("/nonexistent/x.wav"), IoError);
}

TEST_CASE("frame count follows floor((n - window) / hop) + 1") {
  const FrameConfig f;
  CHECK(f.window_samples(48000) == 1200);
  CHECK(f.hop_samples(48000) == 480);
  CHECK(f.frame_count(48000, 48000) == (48000 - 1200) / 480 + 1);
  CHECK(f.frame_count(1199, 48000) == 0);
}

TEST_CASE("pitch of a sine and a pulse train") {
  const PitchTrack t = estimate_f0(signals::sine(440.0, 1.0));
  REQUIRE(t.voiced_count() > 80);
  for (std::size_t i = 0; i < t.voiced.size(); ++i)
    if (t.voiced[i]) CHECK(t.f0_hz[i] == doctest::Approx(440.0).epsilon(0.005));

  const PitchTrack p = estimate_f0(signals::pulse_train({}).audio);
  REQUIRE(p.voiced_count() > 80);
  for (std::size_t i = 0; i < p.voiced.size(); ++i)
    if (p.voiced[i]) CHECK(p.f0_hz[i] == doctest::Approx(200.0).epsilon(0.005));

  CHECK(estimate_f0(signals::white_noise(1.0, 7)).voiced_count() == 0);
}

TEST_CASE("jitter and shimmer of a perturbed pulse train match the generated cycles") {
  signals::PulseTrainSpec spec;
  spec.f0_hz = 200.0;
  spec.jitter = 0.02;
  spec.shimmer = 0.05;
  const auto pt = signals::pulse_train(spec);
  const double jitter_true = rel_mean_abs_diff(pt.periods_s);
  const double shimmer_true = rel_mean_abs_diff(pt.amplitudes);
  CHECK(jitter_true == doctest::Approx(0.02).epsilon(0.01));

  const PitchTrack t = estimate_f0(pt.audio);
  const auto j = compute_jitter(t);
  const auto s = compute_shimmer(pt.audio, t);
  REQUIRE(j.mean.has_value());
  REQUIRE(s.local.has_value());
  CHECK(std::abs(*j.mean - 0.02) <= 0.005);
  CHECK(std::abs(*s.local - shimmer_true) <= 0.01);
}

TEST_CASE("shimmer from explicit amplitudes") {
  const std::vector<double> a = {1.0, 0.8, 1.0, 0.8, 1.0};
  const auto s = shimmer_from_amplitudes(a);
  CHECK(*s.local == doctest::Approx(0.2 / 0.92));
  CHECK(*s.local_db == doctest::Approx(20.0 * std::log10(1.25)));
  CHECK_FALSE(shimmer_from_amplitudes(std::vector<double>{1.0}).local.has_value());
}

TEST_CASE("HNR: sine high, noise low, monotone in SNR") {
  CHECK(hnr_from_correlation(0.99) == doctest::Approx(10.0 * std::log10(99.0)));
  CHECK(hnr_from_correlation(0.5) == doctest::Approx(0.0));

  const AudioBuffer sine = signals::sine(220.0, 1.0);
  CHECK(*compute_hnr(sine, estimate_f0(sine)) >= 40.0);
  const AudioBuffer noise = signals::white_noise(1.0, 11);
  const auto hn = compute_hnr(noise, estimate_f0(noise));
  REQUIRE(hn.has_value());
  CHECK(*hn <= 0.0);

  double prev = 1e9;
  for (double snr : {20.0, 10.0, 0.0}) {
    const AudioBuffer m = sine_plus_noise(snr, 3);
    const double h = *compute_hnr(m, estimate_f0(m));
    CHECK(h < prev);
    prev = h;
  }
}

TEST_CASE("LPC recovers AR(2) coefficients") {
  Rng rng(5);
  std::vector<double> x(40000, 0.0);
  for (std::size_t n = 2; n < x.size(); ++n) x[n] = 1.3 * x[n - 1] - 0.8 * x[n - 2] + rng.normal();
  const auto a = lpc(x, 2);
  CHECK(a[0] == 1.0);
  CHECK(a[1] == doctest::Approx(-1.3).epsilon(0.02));
  CHECK(a[2] == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("polynomial roots and resonances") {
  const std::vector<double> c = {1.0, -6.0, 11.0, -6.0};  // (z-1)(z-2)(z-3)
  auto r = polynomial_roots(c);
  std::vector<double> re;
  for (auto z : r) re.push_back(z.real());
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(1.0));
  CHECK(re[1] == doctest::Approx(2.0));
  CHECK(re[2] == doctest::Approx(3.0));

  // Pole pair at radius 0.95 and angle for 1 kHz at 10 kHz.
  const double th = 2.0 * M_PI * 1000.0 / 10000.0, rad = 0.95;
  const std::vector<double> a = {1.0, -2.0 * rad * std::cos(th), rad * rad};
  const auto res = lpc_resonances(a, 10000);
  REQUIRE(res.size() == 1);
  CHECK(res[0].frequency_hz == doctest::Approx(1000.0));
  CHECK(res[0].bandwidth_hz == doctest::Approx(-std::log(rad) * 10000.0 / M_PI));
}

TEST_CASE("resampling preserves an in-band sine") {
  const AudioBuffer in = signals::sine(1000.0, 0.5, 48000);
  const auto out = resample(in.samples, 48000, 10000);
  CHECK(out.size() == doctest::Approx(5000).epsilon(0.002));
  const AudioBuffer ref = signals::sine(1000.0, 0.5, 10000);
  for (std::size_t i = 500; i < 4500; ++i) CHECK(std::abs(out[i] - ref.samples[i]) < 0.01);
}

TEST_CASE("F1 of a single-resonance vowel") {
  const AudioBuffer v = signals::vowel(120.0, {600.0}, {80.0}, 1.0);
  const auto f1 = estimate_f1_formant(v, estimate_f0(v));
  REQUIRE(f1.has_value());
  CHECK(std::abs(*f1 - 600.0) <= 50.0);
}

TEST_CASE("deltas of a ramp equal its slope") {
  std::vector<double> ramp(10);
  for (int t = 0; t < 10; ++t) ramp[t] = 3.0 * t;
  const auto d = deltas(ramp, 10, 1, 2);
  for (int t = 2; t < 8; ++t) CHECK(d[t] == doctest::Approx(3.0));
  // Edge replication: at t = 0 the window sees rows {0,0,0,1,2}.
  CHECK(d[0] == doctest::Approx((1 * 3.0 + 2 * 6.0) / 10.0));
}

TEST_CASE("MFCC is 98 x 39 for one second at 48 kHz") {
  const MfccMatrix m = compute_mfcc39(signals::sine(440.0, 1.0));
  CHECK(m.rows == 98);
  CHECK(MfccMatrix::kCols == 39);
  CHECK(m.values.size() == 98 * 39);
  for (double v : m.values) CHECK(std::isfinite(v));
}

TEST_CASE("prosodic profile: undefined stays undefined and CSV round-trips") {
  const ProsodicProfile silent = prosodic_profile(AudioBuffer{std::vector<double>(48000, 0.0), 48000});
  CHECK_FALSE(silent.mean_f0.has_value());
  CHECK_FALSE(silent.local_jitter_mean.has_value());

  const ProsodicProfile voiced = prosodic_profile(signals::pulse_train({}).audio);
  REQUIRE(voiced.mean_f0_hz.has_value());
  CHECK(*voiced.mean_f0_hz == doctest::Approx(200.0).epsilon(0.01));
  CHECK(*voiced.mean_f0 == doctest::Approx(hz_to_semitones(200.0)).epsilon(0.01));
  CHECK(hz_to_semitones(200.0) == doctest::Approx(12.0));
  CHECK(ProsodicProfile::field_names().size() == ProsodicProfile::kFieldCount);

  const auto path = (std::filesystem::temp_directory_path() / "cosfuse_test_profiles.csv").string();
  {
    std::ofstream out(path);
    out << profiles_to_csv({{"a", voiced}, {"b", silent}});
  }
  const auto back = profiles_from_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].first == "a");
  CHECK(back[0].second.fields() == voiced.fields());
  CHECK(back[1].second.fields() == silent.fields());
}
