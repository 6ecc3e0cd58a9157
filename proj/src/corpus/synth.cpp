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
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/corpus.hpp"
#include "dsp/signals.hpp"
#include "textfeat/textfeat.hpp"

namespace cosfuse::corpus {

namespace fs = std::filesystem;

namespace {

// Children per group in the reference corpus (30 ASD, 31 control) over
// 151 and 62 segments.
constexpr double kAsdChildrenPerSample = 30.0 / 151.0;
constexpr double kControlChildrenPerSample = 31.0 / 62.0;

std::string numbered(const char* prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, i);
  return buf;
}

std::vector<std::string> sorted_words(const std::unordered_set<std::string>& set) {
  std::vector<std::string> v(set.begin(), set.end());
  std::sort(v.begin(), v.end());
  return v;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

struct Subject {
  std::string id;
  Gender gender;
  int age;
  double f0_offset_hz;
};

}  // namespace

Manifest generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed,
                                   const std::string& out_dir, const std::string& lexicon_dir) {
  if (spec.n_asd < 1 || spec.n_control < 1) throw ConfigError("n_asd and n_control must be >= 1");
  if (!(spec.class_separation >= 0.0)) throw ConfigError("class_separation must be >= 0");
  if (spec.include_audio && !(spec.audio_seconds > 0.1))
    throw ConfigError("audio_seconds must exceed 0.1 s");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());
  if (spec.include_audio) fs::create_directories(fs::path(out_dir) / "audio", ec);
  if (spec.include_transcripts) fs::create_directories(fs::path(out_dir) / "transcripts", ec);
  if (ec) throw IoError("cannot create output subdirectories in '" + out_dir + "'");

  const textfeat::Lexicon lex = textfeat::Lexicon::load(lexicon_dir);
  const auto english = sorted_words(lex.english());
  const auto hindi = sorted_words(lex.hindi());
  if (english.empty() || hindi.empty()) throw ConfigError("lexicons must be non-empty");

  Rng rng(seed);
  Manifest m;
  m.corpus_name = "synthetic";
  m.sample_rate_hz = 48000;

  const double sep = spec.class_separation;
  int sample_no = 0;
  for (Group g : {Group::kAsd, Group::kControl}) {
    const int n = g == Group::kAsd ? spec.n_asd : spec.n_control;
    const double per = g == Group::kAsd ? kAsdChildrenPerSample : kControlChildrenPerSample;
    const int n_children = std::clamp(static_cast<int>(std::lround(n * per)), 1, n);
    // +1 for asd, -1 for control; every class-dependent parameter scales with sep.
    const double sign = g == Group::kAsd ? 1.0 : -1.0;

    std::vector<Subject> subjects;
    for (int c = 0; c < n_children; ++c) {
      Subject s;
      s.id = numbered(g == Group::kAsd ? "asd_c" : "ctl_c", c + 1, 2);
      s.gender = rng.uniform() < 0.62 ? Gender::kMale : Gender::kFemale;
      s.age = 6 + static_cast<int>(rng.below(8));
      s.f0_offset_hz = rng.normal(0.0, 12.0);
      subjects.push_back(s);
    }

    for (int i = 0; i < n; ++i) {
      const Subject& subj = subjects[i % n_children];
      SampleRecord r;
      r.sample_id = numbered("s", ++sample_no, 4);
      r.subject_id = subj.id;
      r.group = g;
      r.gender = subj.gender;
      r.age_years = subj.age;
      r.duration_s = spec.include_audio ? spec.audio_seconds
                                        : std::max(5.0, std::round(rng.normal(45.0, 12.0) * 100) / 100);

      if (spec.include_audio) {
        dsp::signals::PulseTrainSpec ps;
        ps.seconds = spec.audio_seconds;
        ps.sample_rate_hz = m.sample_rate_hz;
        ps.f0_hz = 260.0 + subj.f0_offset_hz + sign * 8.0 * sep + rng.normal(0.0, 6.0);
        ps.random_jitter = 0.01 + 0.004 * sep * (sign > 0 ? 1.0 : 0.0);
        ps.random_shimmer = 0.04 + 0.02 * sep * (sign > 0 ? 1.0 : 0.0);
        ps.seed = rng.next_u64();
        ps.pulse_sigma_s = 0.0002;
        auto audio = dsp::signals::pulse_train(ps).audio;
        dsp::signals::resonate(audio, 650.0 + sign * 25.0 * sep, 90.0);
        dsp::signals::resonate(audio, 2100.0, 150.0);
        dsp::signals::normalize_peak(audio, 0.5);
        const auto noise = dsp::signals::white_noise(spec.audio_seconds, rng.next_u64(),
                                                     m.sample_rate_hz, 0.01);
        audio = dsp::signals::mix(audio, noise);
        const std::string rel = "audio/" + r.sample_id + ".wav";
        dsp::save_wav16(audio, (fs::path(out_dir) / rel).string());
        r.audio_path = rel;
      }

      if (spec.include_transcripts) {
        const double p_switch = std::clamp(0.25 + sign * 0.06 * sep, 0.02, 0.9);
        const int n_tokens = 8 + static_cast<int>(rng.below(13));
        bool hindi_now = rng.uniform() < 0.5;
        std::string text;
        int in_sentence = 0;
        const int sentence_len = 4 + static_cast<int>(rng.below(5));
        for (int k = 0; k < n_tokens; ++k) {
          if (k > 0 && rng.uniform() < p_switch) hindi_now = !hindi_now;
          const auto& words = hindi_now ? hindi : english;
          std::string w = words[rng.below(words.size())];
          if (in_sentence == 0 && !w.empty()) w[0] = static_cast<char>(std::toupper(w[0]));
          text += (k ? " " : "") + w;
          if (++in_sentence == sentence_len || k + 1 == n_tokens) {
            text += rng.uniform() < 0.3 ? "?" : ".";
            in_sentence = 0;
          }
        }
        const std::string rel = "transcripts/" + r.sample_id + ".txt";
        write_text(fs::path(out_dir) / rel, text + "\n");
        r.transcript_path = rel;
      }
      m.samples.push_back(std::move(r));
    }
  }

  write_text(fs::path(out_dir) / "manifest.csv", manifest_to_csv(m));
  write_text(fs::path(out_dir) / "synthetic.json",
             "{\"n_asd\": " + std::to_string(spec.n_asd) +
                 ", \"n_control\": " + std::to_string(spec.n_control) +
                 ", \"class_separation\": " + csv::format_double(spec.class_separation) +
                 ", \"audio_seconds\": " + csv::format_double(spec.audio_seconds) +
                 ", \"include_audio\": " + (spec.include_audio ? "true" : "false") +
                 ", \"include_transcripts\": " + (spec.include_transcripts ? "true" : "false") +
                 ", \"seed\": " + std::to_string(seed) + "}\n");

  // Paths in the returned manifest resolve against out_dir, as load_manifest would.
  for (auto& s : m.samples) {
    if (!s.audio_path.empty()) s.audio_path = (fs::path(out_dir) / s.audio_path).string();
    if (!s.transcript_path.empty())
      s.transcript_path = (fs::path(out_dir) / s.transcript_path).string();
  }
  return m;
}

}  // namespace cosfuse::corpus
