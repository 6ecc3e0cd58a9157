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
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "common/error.hpp"
#include "corpus/corpus.hpp"

using namespace cosfuse;
using namespace cosfuse::corpus;
namespace fs = std::filesystem;

namespace {

const char* kHeader = "sample_id,subject_id,group,gender,age_years,audio_path,transcript_path,duration_s\n";

// n_asd asd samples then n_control control samples, four segments per subject.
Manifest make_manifest(int n_asd, int n_control) {
  Manifest m;
  for (int i = 0; i < n_asd + n_control; ++i) {
    SampleRecord s;
    const bool asd = i < n_asd;
    s.sample_id = "s" + std::to_string(1000 + i);
    s.subject_id = (asd ? "a" : "c") + std::to_string(i / 4);
    s.group = asd ? Group::kAsd : Group::kControl;
    s.gender = i % 3 == 0 ? Gender::kFemale : Gender::kMale;
    s.age_years = 6 + i % 8;
    s.duration_s = 30.0;
    m.samples.push_back(s);
  }
  return m;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cosfuse_test_corpus_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("manifest parses and resolves relative paths") {
  const std::string text = std::string(kHeader) +
                           "s1,c1,asd,M,7,audio/s1.wav,tr/s1.txt,12.5\n"
                           "s2,c2,control,F,9,,,3\n";
  const Manifest m = parse_manifest(text, "demo", "/data/corpus");
  REQUIRE(m.samples.size() == 2);
  CHECK(m.samples[0].group == Group::kAsd);
  CHECK(m.samples[0].gender == Gender::kMale);
  CHECK(m.samples[0].audio_path == "/data/corpus/audio/s1.wav");
  CHECK(m.samples[1].transcript_path.empty());
  CHECK(m.samples[1].duration_s == 3.0);
  CHECK(m.count(Group::kControl) == 1);
  CHECK(m.find("s2").value() == 1);
  CHECK_FALSE(m.find("nope").has_value());
}

TEST_CASE("manifest errors name the row and column") {
  auto fails_at = [](const std::string& body, std::size_t row, const std::string& col) {
    try {
      parse_manifest(std::string(kHeader) + body);
    } catch (const ParseError& e) {
      CHECK(e.row() == row);
      CHECK(e.column() == col);
      return;
    }
    FAIL("expected ParseError");
  };
  fails_at("s1,c1,asd,M,7,,,1\ns2,c1,autistic,M,7,,,1\n", 2, "group");
  fails_at("s1,c1,asd,X,7,,,1\n", 1, "gender");
  fails_at("s1,c1,asd,M,25,,,1\n", 1, "age_years");
  fails_at("s1,c1,asd,M,7,,,-1\n", 1, "duration_s");
  fails_at("s1,c1,asd,M,7,,,1\ns1,c1,asd,M,7,,,1\n", 2, "sample_id");
  CHECK_THROWS_AS(parse_manifest("id,group\ns1,asd\n"), ParseError);
}

TEST_CASE("manifest CSV round-trips") {
  const Manifest m = make_manifest(5, 3);
  const Manifest back = parse_manifest(manifest_to_csv(m));
  CHECK(back.samples == m.samples);
}

TEST_CASE("both groups are required") {
  CHECK_THROWS_AS(require_both_groups(make_manifest(4, 0)), ConfigError);
  CHECK_NOTHROW(require_both_groups(make_manifest(4, 1)));
}

TEST_CASE("stratified folds on 151/62 give sizes 43,43,43,42,42") {
  // Oracle: dealing 151 then 62 round-robin with the position carried over
  // puts 31,30,30,30,30 asd and 12,13,13,12,12 control samples per fold.
  const Manifest m = make_manifest(151, 62);
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const FoldAssignment f = make_folds(m, 5, seed);
    std::multiset<std::size_t> sizes;
    for (int k = 0; k < 5; ++k) {
      const auto test = f.test_indices(m, k);
      sizes.insert(test.size());
      int control = 0;
      for (auto i : test) control += m.samples[i].group == Group::kControl;
      CHECK((control == 12 || control == 13));
      CHECK(test.size() + f.train_indices(m, k).size() == m.samples.size());
    }
    CHECK(sizes == std::multiset<std::size_t>{42, 42, 43, 43, 43});
  }
}

TEST_CASE("folds are deterministic per seed and vary across seeds") {
  const Manifest m = make_manifest(151, 62);
  CHECK(make_folds(m, 5, 7).assignment == make_folds(m, 5, 7).assignment);
  CHECK(make_folds(m, 5, 7).assignment != make_folds(m, 5, 8).assignment);
}

TEST_CASE("fold errors") {
  CHECK_THROWS_AS(make_folds(make_manifest(10, 10), 1, 0), ConfigError);
  CHECK_THROWS_AS(make_folds(make_manifest(10, 3), 5, 0), ConfigError);
}

TEST_CASE("subject-disjoint folds keep every subject in one fold") {
  const Manifest m = make_manifest(151, 62);
  const FoldAssignment f = make_subject_folds(m, 5, 3);
  std::map<std::string, std::set<int>> by_subject;
  for (const auto& s : m.samples) by_subject[s.subject_id].insert(f.fold_of(s.sample_id));
  for (const auto& [subject, folds] : by_subject) CHECK(folds.size() == 1);
  for (int k = 0; k < 5; ++k) CHECK(!f.test_indices(m, k).empty());
}

TEST_CASE("fold files round-trip and must cover the manifest") {
  const Manifest m = make_manifest(20, 10);
  const FoldAssignment f = make_folds(m, 5, 11);
  const fs::path dir = temp_dir("folds");
  save_folds(f, m, (dir / "folds.csv").string());
  const FoldAssignment back = load_folds((dir / "folds.csv").string(), m);
  CHECK(back.assignment == f.assignment);
  CHECK(back.k == 5);

  Manifest bigger = m;
  bigger.samples.push_back(m.samples.front());
  bigger.samples.back().sample_id = "extra";
  CHECK_THROWS_AS(load_folds((dir / "folds.csv").string(), bigger), ConfigError);
}

TEST_CASE("corpus statistics reproduce the reference cohort durations and counts") {
  // 151 asd samples totalling 105.76 min and 62 control samples totalling
  // 53.99 min; children 18M/12F asd and 20M/11F control.
  Manifest m;
  auto add = [&](Group g, int n, double total_min, int males, int females) {
    const double each = total_min * 60.0 / n;
    for (int i = 0; i < n; ++i) {
      SampleRecord s;
      s.group = g;
      const int child = i % (males + females);
      s.subject_id = std::string(g == Group::kAsd ? "a" : "c") + std::to_string(child);
      s.sample_id = s.subject_id + "_" + std::to_string(i);
      s.gender = child < males ? Gender::kMale : Gender::kFemale;
      s.age_years = 6 + child % 8;
      s.duration_s = each;
      m.samples.push_back(s);
    }
  };
  add(Group::kAsd, 151, 105.76, 18, 12);
  add(Group::kControl, 62, 53.99, 20, 11);
  const CorpusStatistics st = corpus_statistics(m);
  CHECK(st.asd.n_samples == 151);
  CHECK(st.control.n_samples == 62);
  CHECK(st.asd.duration_min == doctest::Approx(105.76).epsilon(1e-12));
  CHECK(st.control.duration_min == doctest::Approx(53.99).epsilon(1e-12));
  CHECK(st.total_duration_min == doctest::Approx(159.75).epsilon(1e-12));
  CHECK(st.asd.n_children == 30);
  CHECK(st.asd.n_children_male == 18);
  CHECK(st.asd.n_children_female == 12);
  CHECK(st.control.n_children == 31);
  CHECK(st.control.n_children_male == 20);
  CHECK(st.asd.age_min == 6);
  CHECK(st.asd.age_max == 13);
  const std::string table = corpus_statistics_table(st);
  CHECK(table.find("105.76") != std::string::npos);
  CHECK(table.find("53.99") != std::string::npos);
}

TEST_CASE("synthetic corpus matches the requested counts and is reproducible") {
  const fs::path a = temp_dir("synth_a"), b = temp_dir("synth_b");
  SyntheticSpec spec;
  spec.class_separation = 1.0;
  const std::string lex = std::string(COSFUSE_SOURCE_DIR) + "/data/lexicon";
  const Manifest m = generate_synthetic_corpus(spec, 5, a.string(), lex);
  CHECK(m.samples.size() == 213);
  CHECK(m.count(Group::kAsd) == 151);
  CHECK(m.count(Group::kControl) == 62);
  CHECK(fs::exists(a / "manifest.csv"));
  for (const auto& s : m.samples) {
    CHECK(fs::exists(s.transcript_path));
    CHECK(s.audio_path.empty());
  }
  const CorpusStatistics st = corpus_statistics(m);
  CHECK(st.asd.n_children == 30);
  CHECK(st.control.n_children == 31);

  generate_synthetic_corpus(spec, 5, b.string(), lex);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(a / "manifest.csv") == slurp(b / "manifest.csv"));
  CHECK(slurp(a / "transcripts" / "s0001.txt") == slurp(b / "transcripts" / "s0001.txt"));

  // The written manifest reloads to the returned one.
  CHECK(load_manifest((a / "manifest.csv").string()).samples == m.samples);
}

TEST_CASE("synthetic audio is written when requested") {
  const fs::path dir = temp_dir("synth_audio");
  SyntheticSpec spec;
  spec.n_asd = 3;
  spec.n_control = 2;
  spec.include_audio = true;
  spec.audio_seconds = 0.5;
  const Manifest m =
      generate_synthetic_corpus(spec, 1, dir.string(), std::string(COSFUSE_SOURCE_DIR) + "/data/lexicon");
  REQUIRE(m.samples.size() == 5);
  for (const auto& s : m.samples) {
    CHECK(fs::exists(s.audio_path));
    CHECK(s.duration_s == doctest::Approx(0.5));
  }
  CHECK_THROWS_AS(generate_synthetic_corpus(SyntheticSpec{0, 2}, 1, dir.string(), ""), Error);
}
