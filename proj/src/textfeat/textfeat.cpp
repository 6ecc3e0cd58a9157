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

#include "textfeat/textfeat.hpp"

#include <fstream>

#include "common/csv.hpp"
#include "common/error.hpp"

namespace cosfuse::textfeat {

namespace {

// Decodes one UTF-8 code point at s[i]; advances i. Invalid bytes decode as U+FFFD.
char32_t next_codepoint(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  int len = 1;
  char32_t cp = 0xFFFD;
  if (b0 < 0x80) {
    cp = b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    i = s.size();
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

bool is_sentence_end(char32_t c) { return c == '.' || c == '!' || c == '?' || c == 0x0964 || c == 0x0965; }

bool is_separator(char32_t c) {
  if (c == '\'') return false;
  if (c < 0x80) return !((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'));
  if (c == 0x00A0) return true;
  if (c >= 0x2000 && c <= 0x206F) return true;  // general punctuation, spaces
  if (c == 0x0964 || c == 0x0965 || c == 0x3000) return true;
  return false;
}

}  // namespace

std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    next_codepoint(s, i);
    ++n;
  }
  return n;
}

bool contains_devanagari(std::string_view token) {
  for (std::size_t i = 0; i < token.size();) {
    const char32_t c = next_codepoint(token, i);
    if (c >= 0x0900 && c <= 0x097F) return true;
  }
  return false;
}

Transcript tokenize(std::string_view text) {
  Transcript t;
  t.text = std::string(text);
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    std::string lower = current;
    for (auto& ch : lower)
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    // Apostrophes only count inside a word.
    while (!lower.empty() && lower.front() == '\'') {
      lower.erase(0, 1);
      current.erase(0, 1);
    }
    while (!lower.empty() && lower.back() == '\'') {
      lower.pop_back();
      current.pop_back();
    }
    if (!lower.empty()) {
      t.tokens.push_back(std::move(lower));
      t.originals.push_back(current);
    }
    current.clear();
  };
  auto close_sentence = [&] {
    if (!t.tokens.empty() &&
        (t.sentence_boundaries.empty() || t.sentence_boundaries.back() < t.tokens.size()))
      t.sentence_boundaries.push_back(t.tokens.size());
  };
  for (std::size_t i = 0; i < text.size();) {
    const std::size_t start = i;
    const char32_t c = next_codepoint(text, i);
    if (is_separator(c)) {
      flush();
      if (is_sentence_end(c)) close_sentence();
    } else {
      current.append(text.substr(start, i - start));
    }
  }
  flush();
  close_sentence();
  return t;
}

std::string_view to_string(Lang l) {
  switch (l) {
    case Lang::kEn:
      return "en";
    case Lang::kHi:
      return "hi";
    default:
      return "other";
  }
}

std::unordered_set<std::string> Lexicon::read_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon '" + path + "'");
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string w = csv::trim(line.substr(0, line.find('\r')));
    if (!w.empty() && w[0] != '#') out.insert(w);
  }
  return out;
}

Lexicon Lexicon::load(const std::string& dir) {
  return Lexicon(read_list(dir + "/en.txt"), read_list(dir + "/hi_latn.txt"));
}

const Lexicon& Lexicon::bundled() {
  static const Lexicon lex = load(std::string(COSFUSE_DATA_DIR) + "/lexicon");
  return lex;
}

std::vector<Lang> tag_language(const Transcript& t, const Lexicon& lex) {
  std::vector<Lang> tags;
  tags.reserve(t.tokens.size());
  for (const auto& tok : t.tokens) {
    Lang tag;
    if (contains_devanagari(tok)) {
      tag = Lang::kHi;
    } else if (lex.is_english(tok)) {
      tag = Lang::kEn;
    } else if (lex.is_hindi(tok)) {
      tag = Lang::kHi;
    } else {
      tag = tags.empty() ? Lang::kOther : tags.back();
    }
    tags.push_back(tag);
  }
  return tags;
}

const std::array<std::string, LinguisticHandcrafted::kArity>& LinguisticHandcrafted::field_names() {
  static const std::array<std::string, kArity> names = {
      "avg_word_length", "avg_sentence_length", "speech_rate", "english_ratio",
      "hindi_ratio",     "switch_count",        "switch_rate"};
  return names;
}

std::array<double, LinguisticHandcrafted::kArity> LinguisticHandcrafted::values() const {
  return {avg_word_length, avg_sentence_length, speech_rate, english_ratio,
          hindi_ratio,     switch_count,        switch_rate};
}

std::optional<LinguisticHandcrafted> handcrafted_features(const Transcript& t,
                                                          const std::vector<Lang>& tags,
                                                          double duration_s) {
  if (!(duration_s > 0.0)) throw Error(ErrorCode::kArgument, "duration_s must be > 0");
  if (tags.size() != t.tokens.size()) throw Error(ErrorCode::kArgument, "tag/token length mismatch");
  if (t.tokens.empty()) return std::nullopt;

  const double n = static_cast<double>(t.tokens.size());
  LinguisticHandcrafted f;
  double chars = 0.0;
  for (const auto& tok : t.tokens) chars += static_cast<double>(codepoint_count(tok));
  f.avg_word_length = chars / n;
  f.avg_sentence_length = n / static_cast<double>(std::max<std::size_t>(1, t.sentence_boundaries.size()));
  f.speech_rate = n / duration_s;

  std::size_t en = 0, hi = 0, switches = 0;
  std::optional<Lang> last;
  for (Lang l : tags) {
    if (l == Lang::kOther) continue;
    (l == Lang::kEn ? en : hi)++;
    if (last && *last != l) ++switches;
    last = l;
  }
  f.english_ratio = static_cast<double>(en) / n;
  f.hindi_ratio = static_cast<double>(hi) / n;
  f.switch_count = static_cast<double>(switches);
  const std::size_t tagged = en + hi;
  f.switch_rate = static_cast<double>(switches) / static_cast<double>(std::max<std::size_t>(1, tagged > 0 ? tagged - 1 : 0));
  return f;
}

std::string features_to_csv(
    const std::vector<std::pair<std::string, std::optional<LinguisticHandcrafted>>>& rows) {
  std::vector<std::string> header = {"sample_id"};
  for (const auto& n : LinguisticHandcrafted::field_names()) header.push_back(n);
  std::string out = csv::join_row(header) + "\n";
  for (const auto& [id, f] : rows) {
    std::vector<std::string> cells = {id};
    for (std::size_t i = 0; i < LinguisticHandcrafted::kArity; ++i)
      cells.push_back(f ? csv::format_double(f->values()[i]) : "");
    out += csv::join_row(cells) + "\n";
  }
  return out;
}

}  // namespace cosfuse::textfeat
