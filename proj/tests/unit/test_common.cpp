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

#include <cstdlib>
#include <map>
#include <set>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

using namespace cosfuse;

TEST_CASE("csv parse handles quotes, doubled quotes and CRLF") {
  const auto rows = csv::parse("a,b,c\r\n\"x,1\",\"say \"\"hi\"\"\",\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
  CHECK(rows[1] == std::vector<std::string>{"x,1", "say \"hi\"", ""});
}

TEST_CASE("csv join_row quotes only when needed and round-trips") {
  const std::vector<std::string> fields = {"plain", "with,comma", "with \"quote\"", ""};
  const std::string line = csv::join_row(fields);
  CHECK(line == "plain,\"with,comma\",\"with \"\"quote\"\"\",");
  const auto back = csv::parse(line + "\n");
  REQUIRE(back.size() == 1);
  CHECK(back[0] == fields);
}

TEST_CASE("format_double is shortest round-trip") {
  for (double v : {0.1, 1.0 / 3.0, 105.76, -2.5e-9, 12345678.9}) {
    const std::string s = csv::format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(csv::format_double(0.5) == "0.5");
}

TEST_CASE("fnv1a64 matches published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("rng is deterministic per seed and below() stays in range") {
  Rng a(42), b(42), c(43);
  std::vector<std::uint64_t> xa, xb, xc;
  for (int i = 0; i < 16; ++i) {
    xa.push_back(a.next_u64());
    xb.push_back(b.next_u64());
    xc.push_back(c.next_u64());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);

  Rng r(7);
  std::map<std::uint64_t, int> hist;
  for (int i = 0; i < 7000; ++i) {
    const auto v = r.below(7);
    REQUIRE(v < 7);
    ++hist[v];
  }
  CHECK(hist.size() == 7);
  for (const auto& [k, n] : hist) CHECK(n > 800);
}

TEST_CASE("rng normal has unit variance and shuffle is a permutation") {
  Rng r(1);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);

  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  r.shuffle(v);
  CHECK(std::set<int>(v.begin(), v.end()).size() == 50);
}

TEST_CASE("mix_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a)
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(mix_seed(a, b));
  CHECK(seen.size() == 400);
}

TEST_CASE("error codes follow the public numbering") {
  CHECK(static_cast<int>(IoError("x").code()) == 3);
  CHECK(static_cast<int>(ConfigError("x").code()) == 5);
  const ParseError p(4, "group", "bad value");
  CHECK(p.row() == 4);
  CHECK(p.column() == "group");
  CHECK(std::string(p.what()).find("row 4") != std::string::npos);
}
