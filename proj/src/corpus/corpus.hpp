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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cosfuse::corpus {

// Label convention: control = 0, asd = 1.
enum class Group : int { kControl = 0, kAsd = 1 };
enum class Gender : int { kMale = 0, kFemale = 1 };

inline constexpr int kMinAgeYears = 3;
inline constexpr int kMaxAgeYears = 13;

std::string_view to_string(Group g);
std::string_view to_string(Gender g);
std::optional<Group> parse_group(std::string_view s);
std::optional<Gender> parse_gender(std::string_view s);

struct SampleRecord {
  std::string sample_id;
  std::string subject_id;
  Group group = Group::kControl;
  Gender gender = Gender::kMale;
  int age_years = kMinAgeYears;
  std::string audio_path;
  std::string transcript_path;  // empty when absent
  double duration_s = 0.0;

  bool operator==(const SampleRecord&) const = default;
};

struct Manifest {
  std::vector<SampleRecord> samples;
  std::string corpus_name;
  int sample_rate_hz = 48000;

  // Index of sample_id, or nullopt.
  std::optional<std::size_t> find(std::string_view sample_id) const;
  std::size_t count(Group g) const;
};

// Relative audio/transcript paths are resolved against the manifest's directory.
Manifest load_manifest(const std::string& path);
Manifest parse_manifest(std::string_view csv_text, std::string corpus_name = "corpus",
                        const std::string& base_dir = "");
std::string manifest_to_csv(const Manifest& m);
void save_manifest(const Manifest& m, const std::string& path);

// Throws ConfigError unless both groups are present.
void require_both_groups(const Manifest& m);

struct FoldAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignment;

  int fold_of(const std::string& sample_id) const;
  // Sample indices (manifest order) belonging to / excluded from `fold`.
  std::vector<std::size_t> test_indices(const Manifest& m, int fold) const;
  std::vector<std::size_t> train_indices(const Manifest& m, int fold) const;
};

// Stratified by group: each group's samples are shuffled with the seed and
// dealt round-robin into folds, the deal position carrying over between groups.
FoldAssignment make_folds(const Manifest& m, int k, std::uint64_t seed);

// Every subject's segments share a fold. Subjects are shuffled per group and
// placed greedily on the fold with the fewest samples of that group.
FoldAssignment make_subject_folds(const Manifest& m, int k, std::uint64_t seed);

std::string folds_to_csv(const FoldAssignment& f, const Manifest& m);
void save_folds(const FoldAssignment& f, const Manifest& m, const std::string& path);
FoldAssignment load_folds(const std::string& path, const Manifest& m);

struct GroupStats {
  std::size_t n_samples = 0;
  std::size_t n_children = 0;  // distinct subject_id
  std::size_t n_children_male = 0;
  std::size_t n_children_female = 0;
  std::size_t n_samples_male = 0;
  std::size_t n_samples_female = 0;
  int age_min = 0;
  int age_max = 0;
  double duration_min = 0.0;
};

struct CorpusStatistics {
  GroupStats asd;
  GroupStats control;
  double total_duration_min = 0.0;
  std::size_t total_samples = 0;

  const GroupStats& of(Group g) const { return g == Group::kAsd ? asd : control; }
};

CorpusStatistics corpus_statistics(const Manifest& m);
std::string corpus_statistics_table(const CorpusStatistics& s);

struct SyntheticSpec {
  int n_asd = 151;
  int n_control = 62;
  double class_separation = 1.0;
  double audio_seconds = 1.5;
  bool include_audio = false;
  bool include_transcripts = true;
};

// Writes manifest.csv (plus audio/ and transcripts/ when requested) to out_dir.
// lexicon_dir supplies the English and romanized-Hindi word lists.
Manifest generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed,
                                   const std::string& out_dir, const std::string& lexicon_dir);

}  // namespace cosfuse::corpus
