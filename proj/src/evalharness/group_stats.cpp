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
#include <cstdio>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "evalharness/evalharness.hpp"

namespace cosfuse::eval {

const std::vector<std::string>& group_stat_features() {
  static const std::vector<std::string> names = {
      "mean_f0",           "stddev_f0",           "mean_loudness",    "stddev_loudness",
      "local_shimmer_mean", "local_db_shimmer",   "hnr_db",           "f1_frequency_hz",
      "local_jitter_mean", "local_jitter_stddev", "long_rel_f0_mean", "long_rel_f0_stddev"};
  return names;
}

const StatCell& GroupStatsTable::at(const std::string& feature, const std::string& subset, corpus::Group g,
                                    corpus::Gender s) const {
  const auto it = cells.find({feature, subset, g, s});
  if (it == cells.end()) throw Error(ErrorCode::kArgument, "no statistics cell for " + feature + "/" + subset);
  return it->second;
}

GroupStatsTable group_statistics(const corpus::Manifest& manifest,
                                 const std::map<std::string, dsp::ProsodicProfile>& profiles,
                                 const std::vector<Subset>& subsets) {
  if (manifest.samples.empty()) throw Error(ErrorCode::kArgument, "empty manifest");
  for (const auto& s : manifest.samples)
    if (!profiles.count(s.sample_id))
      throw Error(ErrorCode::kValidation, "no prosodic profile for sample '" + s.sample_id + "'");
  const auto& names = dsp::ProsodicProfile::field_names();
  std::vector<std::size_t> field_index;
  for (const auto& f : group_stat_features())
    field_index.push_back(static_cast<std::size_t>(std::find(names.begin(), names.end(), f) - names.begin()));

  GroupStatsTable t;
  t.features = group_stat_features();
  for (const auto& sub : subsets) {
    t.subsets.push_back(sub.name);
    for (std::size_t fi = 0; fi < t.features.size(); ++fi) {
      for (auto g : {corpus::Group::kAsd, corpus::Group::kControl}) {
        for (auto sex : {corpus::Gender::kMale, corpus::Gender::kFemale}) {
          std::vector<double> v;
          for (auto i : sub.indices) {
            const auto& s = manifest.samples.at(i);
            if (s.group != g || s.gender != sex) continue;
            const auto m = profiles.at(s.sample_id).fields()[field_index[fi]];
            if (m) v.push_back(*m);
          }
          StatCell c;
          c.n = v.size();
          if (!v.empty()) {
            double sum = 0.0;
            for (double x : v) sum += x;
            c.mean = sum / static_cast<double>(v.size());
            double sq = 0.0;
            for (double x : v) sq += (x - c.mean) * (x - c.mean);
            c.stddev = std::sqrt(sq / static_cast<double>(v.size()));
          }
          t.cells[{t.features[fi], sub.name, g, sex}] = c;
        }
      }
    }
  }
  return t;
}

std::string GroupStatsTable::to_csv() const {
  std::string out = "feature,subset,group,gender,n,mean,stddev\n";
  for (const auto& f : features)
    for (const auto& sub : subsets)
      for (auto g : {corpus::Group::kAsd, corpus::Group::kControl})
        for (auto sex : {corpus::Gender::kMale, corpus::Gender::kFemale}) {
          const StatCell& c = at(f, sub, g, sex);
          out += csv::join_row({f, sub, std::string(corpus::to_string(g)), std::string(corpus::to_string(sex)),
                                std::to_string(c.n), c.n ? csv::format_double(c.mean) : "",
                                c.n ? csv::format_double(c.stddev) : ""}) +
                 "\n";
        }
  return out;
}

std::string GroupStatsTable::to_text() const {
  // Gender sections; columns are subset x (control, asd), values mean+-stddev.
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-22s", "FEATURE");
  out += buf;
  for (const auto& sub : subsets)
    for (auto g : {corpus::Group::kControl, corpus::Group::kAsd}) {
      std::snprintf(buf, sizeof(buf), "%22s", (sub + (g == corpus::Group::kAsd ? " AUTISM" : " NORMAL")).c_str());
      out += buf;
    }
  out += "\n";
  for (auto sex : {corpus::Gender::kFemale, corpus::Gender::kMale}) {
    out += sex == corpus::Gender::kFemale ? "FEMALE\n" : "MALE\n";
    for (const auto& f : features) {
      std::snprintf(buf, sizeof(buf), "%-22s", f.c_str());
      out += buf;
      for (const auto& sub : subsets)
        for (auto g : {corpus::Group::kControl, corpus::Group::kAsd}) {
          const StatCell& c = at(f, sub, g, sex);
          char cell[48];
          if (c.n)
            std::snprintf(cell, sizeof(cell), "%.2f+-%.2f", c.mean, c.stddev);
          else
            std::snprintf(cell, sizeof(cell), "-");
          std::snprintf(buf, sizeof(buf), "%22s", cell);
          out += buf;
        }
      out += "\n";
    }
  }
  return out;
}

}  // namespace cosfuse::eval
