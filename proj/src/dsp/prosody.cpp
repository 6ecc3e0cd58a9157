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

#include <charconv>
#include <cmath>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "dsp/dsp.hpp"

namespace cosfuse::dsp {

const std::vector<std::string>& ProsodicProfile::field_names() {
  static const std::vector<std::string> names = {
      "mean_f0",           "stddev_f0",          "mean_loudness",       "stddev_loudness",
      "local_shimmer_mean", "local_db_shimmer",  "hnr_db",              "f1_frequency_hz",
      "local_jitter_mean", "local_jitter_stddev", "long_rel_f0_mean",   "long_rel_f0_stddev",
      "mean_f0_hz",        "stddev_f0_hz"};
  return names;
}

std::vector<Measure> ProsodicProfile::fields() const {
  return {mean_f0,           stddev_f0,          mean_loudness,     stddev_loudness,
          local_shimmer_mean, local_db_shimmer,  hnr_db,            f1_frequency_hz,
          local_jitter_mean, local_jitter_stddev, long_rel_f0_mean, long_rel_f0_stddev,
          mean_f0_hz,        stddev_f0_hz};
}

ProsodicProfile ProsodicProfile::from_fields(std::span<const Measure> v) {
  if (v.size() != kFieldCount) throw Error(ErrorCode::kArgument, "profile needs 14 fields");
  ProsodicProfile p;
  Measure* dst[] = {&p.mean_f0,           &p.stddev_f0,          &p.mean_loudness,
                    &p.stddev_loudness,   &p.local_shimmer_mean, &p.local_db_shimmer,
                    &p.hnr_db,            &p.f1_frequency_hz,    &p.local_jitter_mean,
                    &p.local_jitter_stddev, &p.long_rel_f0_mean, &p.long_rel_f0_stddev,
                    &p.mean_f0_hz,        &p.stddev_f0_hz};
  for (std::size_t i = 0; i < kFieldCount; ++i) *dst[i] = v[i];
  return p;
}

ProsodicProfile prosodic_profile(const AudioBuffer& audio, const FrameConfig& cfg) {
  ProsodicProfile p;
  if (cfg.frame_count(audio.samples.size(), audio.sample_rate_hz) == 0) return p;
  const PitchTrack track = estimate_f0(audio, cfg);

  std::vector<double> st, hz;
  for (std::size_t i = 0; i < track.voiced.size(); ++i) {
    if (!track.voiced[i]) continue;
    hz.push_back(track.f0_hz[i]);
    st.push_back(hz_to_semitones(track.f0_hz[i]));
  }
  auto mean_sd = [](const std::vector<double>& v) -> std::pair<double, double> {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return {m, std::sqrt(acc / static_cast<double>(v.size()))};
  };
  if (!st.empty()) {
    const auto [st_mean, st_sd] = mean_sd(st);
    const auto [hz_mean, hz_sd] = mean_sd(hz);
    p.mean_f0 = st_mean;
    p.stddev_f0 = st_sd;
    p.mean_f0_hz = hz_mean;
    p.stddev_f0_hz = hz_sd;
  }

  const auto loud = compute_loudness(audio, cfg);
  p.mean_loudness = loud.mean;
  p.stddev_loudness = loud.stddev;
  const auto shim = compute_shimmer(audio, track);
  p.local_shimmer_mean = shim.local;
  p.local_db_shimmer = shim.local_db;
  p.hnr_db = compute_hnr(audio, track);
  p.f1_frequency_hz = estimate_f1_formant(audio, track, cfg);
  const auto jit = compute_jitter(track);
  p.local_jitter_mean = jit.mean;
  p.local_jitter_stddev = jit.stddev;
  const auto lr = long_relative_f0(track);
  p.long_rel_f0_mean = lr.mean;
  p.long_rel_f0_stddev = lr.stddev;
  return p;
}

std::string profiles_to_csv(const std::vector<std::pair<std::string, ProsodicProfile>>& rows) {
  std::vector<std::string> header = {"sample_id"};
  for (const auto& n : ProsodicProfile::field_names()) header.push_back(n);
  std::string out = csv::join_row(header) + "\n";
  for (const auto& [id, prof] : rows) {
    std::vector<std::string> cells = {id};
    for (const auto& m : prof.fields()) cells.push_back(m ? csv::format_double(*m) : "");
    out += csv::join_row(cells) + "\n";
  }
  return out;
}

std::vector<std::pair<std::string, ProsodicProfile>> profiles_from_csv(const std::string& path) {
  const auto rows = csv::read_file(path);
  const auto& names = ProsodicProfile::field_names();
  if (rows.empty() || rows[0].size() != names.size() + 1 || rows[0][0] != "sample_id")
    throw ParseError(0, "header", "unexpected profile CSV header");
  for (std::size_t c = 0; c < names.size(); ++c)
    if (csv::trim(rows[0][c + 1]) != names[c]) throw ParseError(0, names[c], "column out of order");
  std::vector<std::pair<std::string, ProsodicProfile>> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != names.size() + 1) throw ParseError(r, "*", "wrong field count");
    std::vector<Measure> vals(names.size());
    for (std::size_t c = 0; c < names.size(); ++c) {
      const std::string cell = csv::trim(rows[r][c + 1]);
      if (cell.empty()) continue;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError(r, names[c], "non-numeric value '" + cell + "'");
      vals[c] = v;
    }
    out.emplace_back(csv::trim(rows[r][0]), ProsodicProfile::from_fields(vals));
  }
  return out;
}

}  // namespace cosfuse::dsp
