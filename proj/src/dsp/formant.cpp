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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "dsp/dsp.hpp"

namespace cosfuse::dsp {

namespace {

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 50; ++k) {
    term *= (x / (2.0 * k)) * (x / (2.0 * k));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

}  // namespace

std::vector<double> resample(std::span<const double> x, int from_hz, int to_hz) {
  if (from_hz <= 0 || to_hz <= 0) throw Error(ErrorCode::kArgument, "sample rates must be positive");
  if (from_hz == to_hz) return {x.begin(), x.end()};
  const int g = std::gcd(from_hz, to_hz);
  const long up = to_hz / g;
  const long down = from_hz / g;
  const long factor = std::max(up, down);

  // Kaiser-windowed sinc at the upsampled rate, cutoff at the lower Nyquist.
  constexpr int kZeroCrossings = 16;
  constexpr double kBeta = 8.0;
  const long half = kZeroCrossings * factor;
  std::vector<double> h(2 * half + 1);
  const double cutoff = 1.0 / static_cast<double>(factor);
  const double i0b = bessel_i0(kBeta);
  for (long i = -half; i <= half; ++i) {
    const double t = static_cast<double>(i);
    const double sinc = i == 0 ? 1.0 : std::sin(M_PI * cutoff * t) / (M_PI * cutoff * t);
    const double ratio = t / static_cast<double>(half);
    const double w = bessel_i0(kBeta * std::sqrt(std::max(0.0, 1.0 - ratio * ratio))) / i0b;
    h[i + half] = cutoff * sinc * w * static_cast<double>(up);
  }

  const long n_in = static_cast<long>(x.size());
  const long n_out = (n_in * up + down - 1) / down;
  std::vector<double> y(static_cast<std::size_t>(n_out), 0.0);
  for (long m = 0; m < n_out; ++m) {
    const long pos = m * down;  // position on the upsampled grid
    // Input samples j contribute with tap pos - j*up in [-half, half].
    const long j_lo = std::max(0L, (pos - half + up - 1) / up);
    const long j_hi = std::min(n_in - 1, (pos + half) / up);
    double acc = 0.0;
    for (long j = j_lo; j <= j_hi; ++j) acc += x[j] * h[pos - j * up + half];
    y[m] = acc;
  }
  return y;
}

std::vector<double> lpc(std::span<const double> frame, int order) {
  const std::size_t n = frame.size();
  std::vector<double> r(order + 1, 0.0);
  for (int k = 0; k <= order; ++k)
    for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i) r[k] += frame[i] * frame[i - k];

  std::vector<double> a(order + 1, 0.0);
  a[0] = 1.0;
  if (r[0] <= 0.0) return a;
  // Tiny lag-window regularization keeps Levinson stable on near-singular input.
  r[0] *= 1.0 + 1e-9;
  double err = r[0];
  std::vector<double> prev(order + 1);
  for (int i = 1; i <= order; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / err;
    prev = a;
    for (int j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
    a[i] = k;
    err *= (1.0 - k * k);
    if (err <= 0.0) break;
  }
  return a;
}

std::vector<std::complex<double>> polynomial_roots(std::span<const double> c) {
  // c[0] z^p + c[1] z^(p-1) + ... + c[p]; roots are companion-matrix eigenvalues.
  std::size_t lead = 0;
  while (lead < c.size() && c[lead] == 0.0) ++lead;
  const std::size_t p = c.size() - lead - 1;
  if (lead >= c.size() || p == 0) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t j = 0; j < p; ++j) comp(0, j) = -c[lead + 1 + j] / c[lead];
  for (std::size_t i = 1; i < p; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(comp, false);
  std::vector<std::complex<double>> roots(p);
  for (std::size_t i = 0; i < p; ++i) roots[i] = solver.eigenvalues()[static_cast<Eigen::Index>(i)];
  return roots;
}

std::vector<Resonance> lpc_resonances(std::span<const double> a, int sample_rate_hz) {
  std::vector<Resonance> out;
  for (const auto& z : polynomial_roots(a)) {
    if (z.imag() <= 0.0) continue;
    const double radius = std::abs(z);
    if (radius <= 0.0 || radius >= 1.0) continue;
    const double freq = std::atan2(z.imag(), z.real()) * sample_rate_hz / (2.0 * M_PI);
    const double bw = -std::log(radius) * sample_rate_hz / M_PI;
    out.push_back({freq, bw});
  }
  std::sort(out.begin(), out.end(),
            [](const Resonance& l, const Resonance& r) { return l.frequency_hz < r.frequency_hz; });
  return out;
}

Measure estimate_f1_formant(const AudioBuffer& audio, const PitchTrack& track,
                            const FrameConfig& /*cfg*/, const LpcConfig& lc) {
  if (track.voiced_count() == 0) return std::nullopt;
  auto y = resample(audio.samples, audio.sample_rate_hz, lc.working_rate_hz);
  for (std::size_t i = y.size(); i-- > 1;) y[i] -= lc.pre_emphasis * y[i - 1];

  const auto win = static_cast<std::size_t>(std::lround(lc.window_s * lc.working_rate_hz));
  std::vector<double> hamming(win);
  for (std::size_t i = 0; i < win; ++i)
    hamming[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / static_cast<double>(win - 1));

  std::vector<double> f1s;
  std::vector<double> frame(win);
  for (std::size_t i = 0; i < track.voiced.size(); ++i) {
    if (!track.voiced[i]) continue;
    const auto center =
        static_cast<long>(std::lround(track.frame_times_s[i] * lc.working_rate_hz));
    const long start = center - static_cast<long>(win / 2);
    if (start < 0 || start + static_cast<long>(win) > static_cast<long>(y.size())) continue;
    for (std::size_t k = 0; k < win; ++k) frame[k] = y[start + k] * hamming[k];
    const auto a = lpc(frame, lc.order);
    for (const auto& res : lpc_resonances(a, lc.working_rate_hz)) {
      if (res.frequency_hz >= lc.min_hz && res.frequency_hz <= lc.max_hz &&
          res.bandwidth_hz < lc.max_bandwidth_hz) {
        f1s.push_back(res.frequency_hz);
        break;
      }
    }
  }
  if (f1s.empty()) return std::nullopt;
  std::sort(f1s.begin(), f1s.end());
  const std::size_t n = f1s.size();
  return n % 2 ? f1s[n / 2] : 0.5 * (f1s[n / 2 - 1] + f1s[n / 2]);
}

}  // namespace cosfuse::dsp
