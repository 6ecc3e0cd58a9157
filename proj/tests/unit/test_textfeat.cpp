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

#include "common/error.hpp"
#include "textfeat/textfeat.hpp"

using namespace cosfuse;
using namespace cosfuse::textfeat;

namespace {

const Lexicon& small_lexicon() {
  static const Lexicon lex({"i", "want", "to", "go", "the", "school", "is", "big"},
                           {"mujhe", "jana", "hai", "bahut", "acha", "ghar"});
  return lex;
}

}  // namespace

TEST_CASE("tokenizer lowercases, drops punctuation and splits sentences") {
  const Transcript t = tokenize("I want to go. School is BIG!  Mujhe ghar jana hai");
  CHECK(t.tokens == std::vector<std::string>{"i", "want", "to", "go", "school", "is", "big", "mujhe", "ghar",
                                             "jana", "hai"});
  CHECK(t.originals[6] == "BIG");
  CHECK(t.sentence_boundaries == std::vector<std::size_t>{4, 7, 11});
}

TEST_CASE("danda ends a sentence and Devanagari counts by code point") {
  const Transcript t = tokenize("मुझे घर जाना है। okay");
  REQUIRE(t.tokens.size() == 5);
  CHECK(t.sentence_boundaries == std::vector<std::size_t>{4, 5});
  CHECK(contains_devanagari(t.tokens[0]));
  CHECK_FALSE(contains_devanagari("okay"));
  CHECK(codepoint_count("घर") == 2);
  CHECK(codepoint_count("abc") == 3);
}

TEST_CASE("empty and punctuation-only transcripts have no tokens") {
  CHECK(tokenize("").tokens.empty());
  CHECK(tokenize(" ... ?! ").tokens.empty());
  CHECK(tokenize(" ... ?! ").sentence_boundaries.empty());
}

TEST_CASE("language tags: lexicon lookup with carry-over for unknown words") {
  const Transcript t = tokenize("zzz I want mujhe xyz acha school");
  const auto tags = tag_language(t, small_lexicon());
  CHECK(tags == std::vector<Lang>{Lang::kOther, Lang::kEn, Lang::kEn, Lang::kHi, Lang::kHi, Lang::kHi, Lang::kEn});
  CHECK(tag_language(tokenize("घर"), small_lexicon()) == std::vector<Lang>{Lang::kHi});
}

TEST_CASE("handcrafted features match hand counts") {
  // Tokens: i want to go mujhe ghar jana hai school (9 tokens, 2 sentences).
  // Tags:   E E    E  E  H     H    H    H   E     -> 2 switches over 8 gaps.
  const Transcript t = tokenize("I want to go mujhe ghar jana hai. School.");
  const auto tags = tag_language(t, small_lexicon());
  const auto f = handcrafted_features(t, tags, 4.5);
  REQUIRE(f.has_value());
  const double chars = 1 + 4 + 2 + 2 + 5 + 4 + 4 + 3 + 6;
  CHECK(f->avg_word_length == doctest::Approx(chars / 9.0));
  CHECK(f->avg_sentence_length == doctest::Approx(4.5));
  CHECK(f->speech_rate == doctest::Approx(2.0));
  CHECK(f->english_ratio == doctest::Approx(5.0 / 9.0));
  CHECK(f->hindi_ratio == doctest::Approx(4.0 / 9.0));
  CHECK(f->switch_count == 2.0);
  CHECK(f->switch_rate == doctest::Approx(2.0 / 8.0));
  CHECK(f->values().size() == 7);
  CHECK(LinguisticHandcrafted::field_names()[6] == "switch_rate");
}

TEST_CASE("empty transcript is undefined, bad duration is an error") {
  const Transcript empty = tokenize("");
  CHECK_FALSE(handcrafted_features(empty, {}, 1.0).has_value());
  const Transcript t = tokenize("go");
  CHECK_THROWS_AS(handcrafted_features(t, tag_language(t, small_lexicon()), 0.0), Error);
  CHECK_THROWS_AS(handcrafted_features(t, {}, 1.0), Error);
}

TEST_CASE("feature CSV leaves undefined rows empty") {
  const Transcript t = tokenize("go home");
  const auto f = handcrafted_features(t, tag_language(t, small_lexicon()), 1.0);
  const std::string csv = features_to_csv({{"a", f}, {"b", std::nullopt}});
  CHECK(csv.rfind("sample_id,avg_word_length,", 0) == 0);
  CHECK(csv.find("\nb,,,,,,,\n") != std::string::npos);
}

TEST_CASE("bundled lexicon loads both lists") {
  const Lexicon lex = Lexicon::load(std::string(COSFUSE_SOURCE_DIR) + "/data/lexicon");
  CHECK(lex.is_english("about"));
  CHECK(lex.is_hindi("aaj"));
  CHECK_FALSE(lex.is_english("aaj"));
  CHECK_THROWS_AS(Lexicon::load("/nonexistent"), IoError);
}
