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

#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adapters/adapters.hpp"
#include "common/error.hpp"

using namespace cosfuse;
using namespace cosfuse::adapters;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cosfuse_test_adapters_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// The bytes the fixture extractor writes: a 2x3 tensor holding 1..6.
std::vector<std::uint8_t> fixture_bytes() {
  const fs::path dir = temp_dir("fixture");
  const std::string cmd = std::string(COSFUSE_FVEC_ECHO) + " " + (dir / "x.fvec").string();
  REQUIRE(std::system(cmd.c_str()) == 0);
  return slurp(dir / "x.fvec");
}

corpus::SampleRecord sample(const std::string& id) {
  corpus::SampleRecord s;
  s.sample_id = id;
  s.subject_id = "c1";
  s.audio_path = "/data/it's here.wav";
  s.transcript_path = "/data/t.txt";
  s.duration_s = 1.0;
  return s;
}

}  // namespace

TEST_CASE("FVEC encoder matches the hand-assembled fixture bytes") {
  const auto expected = fixture_bytes();
  REQUIRE(expected.size() == 4 + 4 + 4 + 8 + 24);
  const FvecTensor t{{2, 3}, {1, 2, 3, 4, 5, 6}};
  CHECK(encode_fvec(t) == expected);
  const FvecTensor back = decode_fvec(expected, "fixture");
  CHECK(back.dims == t.dims);
  CHECK(back.values == t.values);
}

TEST_CASE("FVEC round-trips arbitrary float bit patterns losslessly") {
  FvecTensor t{{3, 5}, {}};
  for (int i = 0; i < 15; ++i) t.values.push_back(static_cast<float>(i) * 0.1f - 0.7f + 1e-7f * i);
  t.values[3] = -0.0f;
  t.values[4] = 3.4e38f;
  t.values[5] = 1e-45f;  // denormal
  const auto bytes = encode_fvec(t);
  const auto back = decode_fvec(bytes, "mem");
  REQUIRE(back.values.size() == t.values.size());
  CHECK(std::memcmp(back.values.data(), t.values.data(), t.values.size() * 4) == 0);

  std::stringstream ss;
  write_fvec(ss, t);
  CHECK(read_fvec(ss, "stream").values == t.values);
}

TEST_CASE("FVEC format errors") {
  auto bytes = fixture_bytes();
  auto with = [&](auto edit) {
    auto b = bytes;
    edit(b);
    return b;
  };
  CHECK_THROWS_AS(decode_fvec(with([](auto& b) { b[0] = 'X'; }), "m"), FormatError);
  CHECK_THROWS_AS(decode_fvec(with([](auto& b) { b[4] = 2; }), "m"), FormatError);
  CHECK_THROWS_AS(decode_fvec(with([](auto& b) { b[8] = 0; }), "m"), FormatError);
  CHECK_THROWS_AS(decode_fvec(with([](auto& b) { b[12] = 0; }), "m"), FormatError);
  CHECK_THROWS_AS(decode_fvec(with([](auto& b) { b.pop_back(); }), "m"), FormatError);
  CHECK_THROWS_AS(decode_fvec(with([](auto& b) { b.push_back(0); }), "m"), FormatError);
  CHECK_THROWS_AS(decode_fvec({'F', 'V'}, "m"), FormatError);
}

TEST_CASE("embedding files: save, load, pool") {
  const fs::path dir = temp_dir("emb");
  EmbeddingSequence seq;
  seq.modality = Modality::kL;
  seq.values.resize(2, 3);
  seq.values << 1, 2, 3, 5, 6, 7;
  save_embedding(seq, (dir / "e.fvec").string());
  const auto back = load_embedding((dir / "e.fvec").string(), Modality::kL);
  CHECK(back.values == seq.values);
  const Vector m = pool_mean(back);
  CHECK(m(0) == 3.0);
  CHECK(m(2) == 5.0);

  FvecTensor one{{4}, {1, 2, 3, 4}};
  std::ofstream(dir / "v.fvec", std::ios::binary) << std::string_view(
      reinterpret_cast<const char*>(encode_fvec(one).data()), encode_fvec(one).size());
  CHECK(load_embedding((dir / "v.fvec").string()).values.rows() == 1);
  CHECK(load_embedding((dir / "v.fvec").string()).values.cols() == 4);

  CHECK_THROWS_AS(load_embedding((dir / "missing.fvec").string()), IoError);
  seq.values(0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(save_embedding(seq, (dir / "nan.fvec").string()), NumericError);
}

TEST_CASE("stub embeddings: shape, determinism, class mean offset") {
  StubParams p;
  p.dim = {16, 8, 4};
  p.min_frames = 2000;
  p.max_frames = 2000;
  p.class_separation = 3.0;
  const auto a1 = stub_extract("s1", corpus::Group::kAsd, Modality::kA, p, 9);
  const auto a2 = stub_extract("s1", corpus::Group::kAsd, Modality::kA, p, 9);
  const auto c1 = stub_extract("s2", corpus::Group::kControl, Modality::kA, p, 9);
  CHECK(a1.values == a2.values);
  CHECK(a1.dim() == 16);
  CHECK(a1.frames() == 2000);
  CHECK(stub_extract("s1", corpus::Group::kAsd, Modality::kL, p, 9).dim() == 8);

  // Oracle: the difference of class means has norm class_separation,
  // up to sampling noise of about sqrt(2 d / T) = 0.13.
  const double gap = (pool_mean(a1) - pool_mean(c1)).norm();
  CHECK(std::abs(gap - 3.0) < 0.4);
  p.class_separation = 0.0;
  const double null_gap = (pool_mean(stub_extract("s1", corpus::Group::kAsd, Modality::kA, p, 9)) -
                           pool_mean(stub_extract("s2", corpus::Group::kControl, Modality::kA, p, 9)))
                              .norm();
  CHECK(null_gap < 0.4);

  p.min_frames = 10;
  p.max_frames = 20;
  for (int i = 0; i < 20; ++i) {
    const auto s = stub_extract("x" + std::to_string(i), corpus::Group::kAsd, Modality::kP, p, 1);
    CHECK(s.frames() >= 10);
    CHECK(s.frames() <= 20);
  }
  p.min_frames = 30;
  CHECK_THROWS_AS(stub_extract("x", corpus::Group::kAsd, Modality::kP, p, 1), ConfigError);
}

TEST_CASE("template expansion shell-quotes path placeholders") {
  CHECK(shell_quote("it's") == "'it'\\''s'");
  const std::string cmd = expand_template("x {audio} {transcript} {out} {modality}", sample("s1"), Modality::kP, "/o");
  CHECK(cmd == "x '/data/it'\\''s here.wav' '/data/t.txt' '/o' P");
}

TEST_CASE("external extractor runs, caches, and reports failures") {
  const std::string work = temp_dir("ext").string();
  ExternalExtractor ok(std::string(COSFUSE_FVEC_ECHO) + " {out}", work);
  const auto e = ok.extract(sample("s1"), Modality::kA);
  CHECK(e.frames() == 2);
  CHECK(e.dim() == 3);
  CHECK(e.values(1, 2) == 6.0f);
  ok.extract(sample("s1"), Modality::kA);
  CHECK(ok.invocations() == 1);
  ok.extract(sample("s1"), Modality::kL);
  CHECK(ok.invocations() == 2);

  ExternalExtractor bad(std::string(COSFUSE_FVEC_ECHO) + " {out} fail", work);
  try {
    bad.extract(sample("s7"), Modality::kA);
    FAIL("expected ExtractionError");
  } catch (const ExtractionError& err) {
    CHECK(err.sample_id() == "s7");
  }

  ExternalExtractor garbage("echo nope > {out}", work);
  CHECK_THROWS_AS(garbage.extract(sample("s8"), Modality::kA), ExtractionError);

  ExternalExtractor slow(std::string(COSFUSE_FVEC_ECHO) + " {out} sleep", work, 0.5);
  const auto t0 = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(slow.extract(sample("s9"), Modality::kA), ExtractionError);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(10));

  CHECK_THROWS_AS(ExternalExtractor("echo", work), ConfigError);
  CHECK_THROWS_AS(ExternalExtractor("x {out}", work, 0.0), ConfigError);
}

TEST_CASE("modality names") {
  CHECK(to_string(Modality::kL) == "L");
  CHECK(parse_modality("P") == Modality::kP);
  CHECK_FALSE(parse_modality("X").has_value());
}
