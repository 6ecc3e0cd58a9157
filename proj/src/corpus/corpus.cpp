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

#include "corpus/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace cosfuse::corpus {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kManifestColumns = {
    "sample_id", "subject_id", "group", "gender", "age_years", "audio_path", "transcript_path",
    "duration_s"};

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty() || base_dir.empty()) return p;
  fs::path path(p);
  if (path.is_absolute()) return p;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

std::string_view to_string(Group g) { return g == Group::kAsd ? "asd" : "control"; }
std::string_view to_string(Gender g) { return g == Gender::kMale ? "M" : "F"; }

std::optional<Group> parse_group(std::string_view s) {
  if (s == "asd") return Group::kAsd;
  if (s == "control") return Group::kControl;
  return std::nullopt;
}

std::optional<Gender> parse_gender(std::string_view s) {
  if (s == "M") return Gender::kMale;
  if (s == "F") return Gender::kFemale;
  return std::nullopt;
}

std::optional<std::size_t> Manifest::find(std::string_view sample_id) const {
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].sample_id == sample_id) return i;
  return std::nullopt;
}

std::size_t Manifest::count(Group g) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [g](const auto& s) { return s.group == g; }));
}

Manifest parse_manifest(std::string_view csv_text, std::string corpus_name,
                        const std::string& base_dir) {
  auto rows = csv::parse(csv_text);
  if (rows.empty()) throw ParseError(0, "header", "missing header row");
  std::vector<std::string> header;
  for (auto& h : rows[0]) header.push_back(csv::trim(h));
  if (header != kManifestColumns) {
    std::string expected;
    for (auto& c : kManifestColumns) expected += (expected.empty() ? "" : ",") + c;
    throw ParseError(0, "header", "expected header '" + expected + "'");
  }

  Manifest m;
  m.corpus_name = std::move(corpus_name);
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto& row = rows[r];
    if (row.size() != kManifestColumns.size()) {
      throw ParseError(r, "*", "expected " + std::to_string(kManifestColumns.size()) +
                                   " fields, found " + std::to_string(row.size()));
    }
    SampleRecord s;
    s.sample_id = csv::trim(row[0]);
    if (s.sample_id.empty()) throw ParseError(r, "sample_id", "missing sample_id");
    if (!seen.insert(s.sample_id).second)
      throw ParseError(r, "sample_id", "duplicate sample_id '" + s.sample_id + "'");
    s.subject_id = csv::trim(row[1]);
    if (s.subject_id.empty()) s.subject_id = s.sample_id;

    const auto group = parse_group(csv::trim(row[2]));
    if (!group) throw ParseError(r, "group", "unknown group label '" + csv::trim(row[2]) + "'");
    s.group = *group;
    const auto gender = parse_gender(csv::trim(row[3]));
    if (!gender) throw ParseError(r, "gender", "unknown gender '" + csv::trim(row[3]) + "'");
    s.gender = *gender;

    const std::string age = csv::trim(row[4]);
    int age_value = 0;
    auto [p, ec] = std::from_chars(age.data(), age.data() + age.size(), age_value);
    if (ec != std::errc() || p != age.data() + age.size())
      throw ParseError(r, "age_years", "non-numeric age '" + age + "'");
    if (age_value < kMinAgeYears || age_value > kMaxAgeYears)
      throw ParseError(r, "age_years", "age " + age + " outside [3, 13]");
    s.age_years = age_value;

    s.audio_path = resolve(base_dir, csv::trim(row[5]));
    s.transcript_path = resolve(base_dir, csv::trim(row[6]));

    const std::string dur = csv::trim(row[7]);
    double d = 0.0;
    auto [p2, ec2] = std::from_chars(dur.data(), dur.data() + dur.size(), d);
    if (ec2 != std::errc() || p2 != dur.data() + dur.size() || !std::isfinite(d))
      throw ParseError(r, "duration_s", "non-numeric duration '" + dur + "'");
    if (d <= 0.0) throw ParseError(r, "duration_s", "duration must be > 0");
    s.duration_s = d;
    m.samples.push_back(std::move(s));
  }
  return m;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const fs::path p(path);
  return parse_manifest(ss.str(), p.stem().string(), p.parent_path().string());
}

std::string manifest_to_csv(const Manifest& m) {
  std::string out = csv::join_row(kManifestColumns) + "\n";
  for (const auto& s : m.samples) {
    out += csv::join_row({s.sample_id, s.subject_id, std::string(to_string(s.group)),
                          std::string(to_string(s.gender)), std::to_string(s.age_years),
                          s.audio_path, s.transcript_path, csv::format_double(s.duration_s)});
    out += "\n";
  }
  return out;
}

void save_manifest(const Manifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << manifest_to_csv(m);
  if (!out) throw IoError("write failed for '" + path + "'");
}

void require_both_groups(const Manifest& m) {
  if (m.count(Group::kAsd) == 0 || m.count(Group::kControl) == 0)
    throw ConfigError("manifest must contain both 'asd' and 'control' samples");
}

int FoldAssignment::fold_of(const std::string& sample_id) const {
  auto it = assignment.find(sample_id);
  if (it == assignment.end()) throw ConfigError("sample '" + sample_id + "' has no fold");
  return it->second;
}

std::vector<std::size_t> FoldAssignment::test_indices(const Manifest& m, int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.samples.size(); ++i)
    if (fold_of(m.samples[i].sample_id) == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(const Manifest& m, int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.samples.size(); ++i)
    if (fold_of(m.samples[i].sample_id) != fold) out.push_back(i);
  return out;
}

namespace {

void check_fold_preconditions(const Manifest& m, int k) {
  if (k < 2) throw ConfigError("k must be >= 2 (got " + std::to_string(k) + ")");
  for (Group g : {Group::kControl, Group::kAsd}) {
    if (m.count(g) < static_cast<std::size_t>(k)) {
      throw ConfigError("group '" + std::string(to_string(g)) + "' has " +
                        std::to_string(m.count(g)) + " samples, fewer than k=" +
                        std::to_string(k));
    }
  }
}

}  // namespace

FoldAssignment make_folds(const Manifest& m, int k, std::uint64_t seed) {
  check_fold_preconditions(m, k);
  FoldAssignment f;
  f.k = k;
  f.seed = seed;
  Rng rng(seed);
  std::size_t deal = 0;
  for (Group g : {Group::kControl, Group::kAsd}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < m.samples.size(); ++i)
      if (m.samples[i].group == g) members.push_back(i);
    rng.shuffle(members);
    for (std::size_t idx : members) {
      f.assignment[m.samples[idx].sample_id] = static_cast<int>(deal % k);
      ++deal;
    }
  }
  return f;
}

FoldAssignment make_subject_folds(const Manifest& m, int k, std::uint64_t seed) {
  check_fold_preconditions(m, k);
  // A subject's group is the majority group of its segments (ties -> asd).
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < m.samples.size(); ++i)
    by_subject[m.samples[i].subject_id].push_back(i);

  FoldAssignment f;
  f.k = k;
  f.seed = seed;
  Rng rng(seed);
  std::vector<std::size_t> fold_total(k, 0);
  for (Group g : {Group::kControl, Group::kAsd}) {
    std::vector<std::string> subjects;
    for (const auto& [subject, idx] : by_subject) {
      std::size_t asd = 0;
      for (auto i : idx) asd += m.samples[i].group == Group::kAsd;
      const Group major = (2 * asd >= idx.size()) ? Group::kAsd : Group::kControl;
      if (major == g) subjects.push_back(subject);
    }
    rng.shuffle(subjects);
    std::stable_sort(subjects.begin(), subjects.end(), [&](const auto& a, const auto& b) {
      return by_subject[a].size() > by_subject[b].size();
    });
    std::vector<std::size_t> fold_group(k, 0);
    for (const auto& subject : subjects) {
      int best = 0;
      for (int j = 1; j < k; ++j) {
        if (fold_group[j] < fold_group[best] ||
            (fold_group[j] == fold_group[best] && fold_total[j] < fold_total[best]))
          best = j;
      }
      for (auto i : by_subject[subject]) f.assignment[m.samples[i].sample_id] = best;
      fold_group[best] += by_subject[subject].size();
      fold_total[best] += by_subject[subject].size();
    }
  }
  return f;
}

std::string folds_to_csv(const FoldAssignment& f, const Manifest& m) {
  std::string out = "sample_id,fold\n";
  for (const auto& s : m.samples)
    out += csv::escape(s.sample_id) + "," + std::to_string(f.fold_of(s.sample_id)) + "\n";
  return out;
}

void save_folds(const FoldAssignment& f, const Manifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << folds_to_csv(f, m);
}

FoldAssignment load_folds(const std::string& path, const Manifest& m) {
  auto rows = csv::read_file(path);
  if (rows.empty() || rows[0].size() != 2 || csv::trim(rows[0][0]) != "sample_id" ||
      csv::trim(rows[0][1]) != "fold")
    throw ParseError(0, "header", "expected header 'sample_id,fold'");
  FoldAssignment f;
  int max_fold = -1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw ParseError(r, "*", "expected 2 fields");
    const std::string id = csv::trim(rows[r][0]);
    const std::string fs_ = csv::trim(rows[r][1]);
    int fold = -1;
    auto [p, ec] = std::from_chars(fs_.data(), fs_.data() + fs_.size(), fold);
    if (ec != std::errc() || p != fs_.data() + fs_.size() || fold < 0)
      throw ParseError(r, "fold", "invalid fold index '" + fs_ + "'");
    if (!f.assignment.emplace(id, fold).second)
      throw ParseError(r, "sample_id", "duplicate sample_id '" + id + "'");
    max_fold = std::max(max_fold, fold);
  }
  f.k = max_fold + 1;
  for (const auto& s : m.samples) {
    if (!f.assignment.count(s.sample_id))
      throw ConfigError("fold file does not cover sample '" + s.sample_id + "'");
  }
  if (f.assignment.size() != m.samples.size())
    throw ConfigError("fold file lists samples absent from the manifest");
  if (f.k < 2) throw ConfigError("fold file must define at least 2 folds");
  return f;
}

CorpusStatistics corpus_statistics(const Manifest& m) {
  if (m.samples.empty()) throw ConfigError("corpus statistics need a non-empty manifest");
  CorpusStatistics st;
  for (Group g : {Group::kControl, Group::kAsd}) {
    GroupStats& gs = g == Group::kAsd ? st.asd : st.control;
    std::set<std::string> male, female, all;
    bool first = true;
    for (const auto& s : m.samples) {
      if (s.group != g) continue;
      ++gs.n_samples;
      all.insert(s.subject_id);
      if (s.gender == Gender::kMale) {
        ++gs.n_samples_male;
        male.insert(s.subject_id);
      } else {
        ++gs.n_samples_female;
        female.insert(s.subject_id);
      }
      gs.age_min = first ? s.age_years : std::min(gs.age_min, s.age_years);
      gs.age_max = first ? s.age_years : std::max(gs.age_max, s.age_years);
      first = false;
      gs.duration_min += s.duration_s / 60.0;
    }
    gs.n_children = all.size();
    gs.n_children_male = male.size();
    gs.n_children_female = female.size();
  }
  st.total_samples = m.samples.size();
  st.total_duration_min = st.asd.duration_min + st.control.duration_min;
  return st;
}

std::string corpus_statistics_table(const CorpusStatistics& s) {
  std::ostringstream o;
  auto row = [&](const std::string& attr, const std::string& group, const std::string& male,
                 const std::string& female, const std::string& total) {
    o << std::left << std::setw(22) << attr << std::setw(10) << group << std::setw(8) << male
      << std::setw(8) << female << total << "\n";
  };
  row("Attribute", "Group", "Male", "Female", "Total");
  auto fmt = [](double v) {
    std::ostringstream x;
    x << std::fixed << std::setprecision(2) << v;
    return x.str();
  };
  auto age = [](const GroupStats& g) {
    if (g.n_samples == 0) return std::string("-");
    std::ostringstream x;
    x << std::setw(2) << std::setfill('0') << g.age_min << " to " << std::setw(2) << g.age_max;
    return x.str();
  };
  for (auto [name, g] : {std::pair{"ASD", &s.asd}, std::pair{"Non-ASD", &s.control}})
    row(std::string(name) == "ASD" ? "Number of Children" : "", name,
        std::to_string(g->n_children_male), std::to_string(g->n_children_female),
        std::to_string(g->n_children));
  for (auto [name, g] : {std::pair{"ASD", &s.asd}, std::pair{"Non-ASD", &s.control}})
    row(std::string(name) == "ASD" ? "Age (years)" : "", name, "", "", age(*g));
  for (auto [name, g] : {std::pair{"ASD", &s.asd}, std::pair{"Non-ASD", &s.control}})
    row(std::string(name) == "ASD" ? "Data Duration (min)" : "", name, "", "",
        fmt(g->duration_min));
  for (auto [name, g] : {std::pair{"ASD", &s.asd}, std::pair{"Non-ASD", &s.control}})
    row(std::string(name) == "ASD" ? "Segmented Samples" : "", name,
        std::to_string(g->n_samples_male), std::to_string(g->n_samples_female),
        std::to_string(g->n_samples));
  o << "Total duration (min): " << fmt(s.total_duration_min) << "\n";
  return o.str();
}

}  // namespace cosfuse::corpus
