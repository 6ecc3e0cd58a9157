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

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace cosfuse::textfeat {

struct Transcript {
  std::string text;
  std::vector<std::string> tokens;     // lowercased
  std::vector<std::string> originals;  // as written
  // Exclusive end token index of each non-empty sentence; strictly increasing.
  std::vector<std::size_t> sentence_boundaries;
};

// Splits on whitespace and punctuation; sentences end at . ! ? U+0964 (danda),
// U+0965 and at end of text. Lowercasing is ASCII-only.
Transcript tokenize(std::string_view text);

enum class Lang { kEn, kHi, kOther };
std::string_view to_string(Lang l);

// Two word lists, one lowercase token per line (UTF-8).
class Lexicon {
 public:
  Lexicon() = default;
  Lexicon(std::unordered_set<std::string> english, std::unordered_set<std::string> hindi)
      : english_(std::move(english)), hindi_(std::move(hindi)) {}

  // Reads <dir>/en.txt and <dir>/hi_latn.txt.
  static Lexicon load(const std::string& dir);
  // The lexicon shipped under data/lexicon, loaded once.
  static const Lexicon& bundled();
  static std::unordered_set<std::string> read_list(const std::string& path);

  bool is_english(const std::string& token) const { return english_.count(token) > 0; }
  bool is_hindi(const std::string& token) const { return hindi_.count(token) > 0; }
  const std::unordered_set<std::string>& english() const { return english_; }
  const std::unordered_set<std::string>& hindi() const { return hindi_; }

 private:
  std::unordered_set<std::string> english_;
  std::unordered_set<std::string> hindi_;
};

bool contains_devanagari(std::string_view token);
std::size_t codepoint_count(std::string_view s);

// Devanagari -> hi; English lexicon -> en; romanized-Hindi lexicon -> hi;
// otherwise the previous token's tag, or other for a leading unknown.
std::vector<Lang> tag_language(const Transcript& t, const Lexicon& lex = Lexicon::bundled());

struct LinguisticHandcrafted {
  double avg_word_length = 0.0;
  double avg_sentence_length = 0.0;
  double speech_rate = 0.0;
  double english_ratio = 0.0;
  double hindi_ratio = 0.0;
  double switch_count = 0.0;
  double switch_rate = 0.0;

  static constexpr std::size_t kArity = 7;
  static const std::array<std::string, kArity>& field_names();
  std::array<double, kArity> values() const;
};

// nullopt (undefined) for an empty transcript; throws on duration_s <= 0.
std::optional<LinguisticHandcrafted> handcrafted_features(const Transcript& t,
                                                          const std::vector<Lang>& tags,
                                                          double duration_s);

std::string features_to_csv(
    const std::vector<std::pair<std::string, std::optional<LinguisticHandcrafted>>>& rows);

}  // namespace cosfuse::textfeat
