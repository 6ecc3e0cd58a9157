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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "common/error.hpp"
#include "corpus/corpus.hpp"
#include "runner/runner.hpp"

using namespace cosfuse;
using namespace cosfuse::runner;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cosfuse_test_runner_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Expects parse_config_text to fail with a message containing `needle`.
void config_fails(const std::string& text, const std::string& needle) {
  try {
    parse_config_text(text, "/base");
  } catch (const ConfigError& e) {
    CAPTURE(e.what());
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
    return;
  }
  FAIL("expected ConfigError for " << text);
}

const fs::path& corpus_dir() {
  static const fs::path dir = [] {
    const fs::path d = temp_dir("corpus");
    corpus::SyntheticSpec spec;
    spec.n_asd = 24;
    spec.n_control = 16;
    corpus::generate_synthetic_corpus(spec, 3, d.string(), std::string(COSFUSE_SOURCE_DIR) + "/data/lexicon");
    return d;
  }();
  return dir;
}

eval::ExperimentReport fake_report(double acc, double f1) {
  eval::ExperimentReport r;
  r.mean_accuracy = acc;
  r.mean_macro_f1 = f1;
  return r;
}

GridEntry entry(const std::string& table, const std::string& model, const std::string& topo, double acc, double f1) {
  GridEntry e;
  e.name = model + "_" + topo;
  e.table = table;
  e.model = model;
  e.topology = topo;
  e.report = fake_report(acc, f1);
  return e;
}

}  // namespace

TEST_CASE("percent formatting is half-up to two decimals") {
  CHECK(format_percent(0.98746) == "98.75");
  CHECK(format_percent(0.9719) == "97.19");
  CHECK(format_percent(0.98745) == "98.75");
  CHECK(format_percent(0.98744) == "98.74");
  CHECK(format_percent(1.0) == "100.00");
  CHECK(format_percent(0.0) == "0.00");
  CHECK(format_percent(0.709) == "70.90");
  CHECK(format_percent(std::nan("")) == kFailedCell);
}

TEST_CASE("config parsing resolves paths and fills defaults") {
  const auto c = parse_config_text(R"({"manifest": "data/m.csv", "topology": "A+L THEN P",
      "providers": {"A": {"kind": "stub"}, "L": {"kind": "handcrafted"},
                    "P": {"kind": "fvec-dir", "dir": "feats/P"}},
      "seed": 9, "train": {"max_epochs": 7}})",
                                   "/base");
  CHECK(c.manifest == "/base/data/m.csv");
  CHECK(c.providers.at(adapters::Modality::kP).dir == "/base/feats/P");
  CHECK(c.folds.k == 5);
  CHECK(c.folds.seed == 9);
  CHECK(c.train.max_epochs == 7);
  CHECK(c.train.batch_size == 32);
  CHECK(c.train.learning_rate == 1e-3);
  CHECK(c.name == "transformer_A+L_THEN_P");
}

TEST_CASE("config errors name the offending key path") {
  const std::string ok_providers = R"("providers": {"A": {"kind": "stub"}})";
  config_fails(R"({"manifest": "m.csv", "topology": "A", "providers": {"A": {"kind": "stub", "dir": "x"}}})",
               "providers.A.dir");
  config_fails(R"({"manifest": "m.csv", "topology": "A", "colour": 1, )" + ok_providers + "}", "'colour'");
  config_fails(R"({"topology": "A", )" + ok_providers + "}", "manifest");
  config_fails(R"({"manifest": "m.csv", )" + ok_providers + "}", "topology");
  config_fails(R"({"manifest": "m.csv", "topology": "A+B", )" + ok_providers + "}", "topology");
  config_fails(R"({"manifest": "m.csv", "topology": "A", "train": {"batch_size": 0}, )" + ok_providers + "}",
               "train.batch_size");
  config_fails(R"({"manifest": "m.csv", "topology": "A", "train": {"batch_size": "32"}, )" + ok_providers + "}",
               "train.batch_size");
  config_fails(R"({"manifest": "m.csv", "topology": "A", "branch": {"attention_heads": 5}, )" + ok_providers + "}",
               "branch.attention_heads");
  config_fails(R"({"manifest": "m.csv", "topology": "L", )" + ok_providers + "}", "providers.L");
  config_fails(R"({"manifest": "m.csv", "topology": "A", "model": "svm", )" + ok_providers + "}", "model");
  config_fails(R"({"manifest": "m.csv", "topology": "A+L THEN P", "model": "knn",
                  "providers": {"A": {"kind": "stub"}, "L": {"kind": "stub"}, "P": {"kind": "stub"}}})",
               "hierarchical");
  config_fails(R"({"manifest": "m.csv", "topology": "A", "providers": {"Q": {"kind": "stub"}}})", "providers.Q");
  config_fails(R"({"manifest": "m.csv", "topology": "A", "providers": {"A": {"kind": "magic"}}})", "providers.A.kind");
  config_fails("{not json", "invalid JSON");
  CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("grid runs isolate failures and keep going") {
  const fs::path dir = temp_dir("grid");
  const std::string manifest = (corpus_dir() / "manifest.csv").string();
  json grid = {{"base",
                {{"manifest", manifest},
                 {"model", "knn"},
                 {"seed", 5},
                 {"table", "individual"},
                 {"providers",
                  {{"A", {{"kind", "stub"}, {"dim", 6}, {"class_separation", 4.0}}},
                   {"L", {{"kind", "handcrafted"}}},
                   {"P", {{"kind", "fvec-dir"}, {"dir", "missing"}}}}}}},
               {"runs",
                json::array({json{{"topology", "A"}}, json{{"topology", "L"}}, json{{"topology", "P"}},
                             json{{"topology", "A"}, {"model", "nonsense"}}})}};
  std::ofstream(dir / "grid.json") << grid.dump(2);

  const auto runs = parse_grid((dir / "grid.json").string());
  REQUIRE(runs.size() == 4);
  CHECK(runs[3].error.find("model") != std::string::npos);
  CHECK(runs[3].topology == "A");

  const ReportBundle b = run_grid(runs, 1);
  REQUIRE(b.entries.size() == 4);
  CHECK(b.any_failed());
  CHECK(b.entries[0].report.has_value());
  CHECK(b.entries[0].report->mean_accuracy >= 0.9);
  CHECK(b.entries[1].report.has_value());
  CHECK_FALSE(b.entries[2].report.has_value());
  CHECK(b.entries[2].error.find("missing P features") != std::string::npos);
  CHECK(b.entries[2].error_code == static_cast<int>(ErrorCode::kValidation));
  CHECK(b.entries[3].error_code == static_cast<int>(ErrorCode::kConfig));

  const fs::path out = dir / "out";
  emit_reports(b, out.string());
  CHECK(fs::exists(out / "metadata.json"));
  CHECK(fs::exists(out / "failures.json"));
  CHECK(fs::exists(out / "tables" / "individual.csv"));
  const json meta = json::parse(slurp(out / "metadata.json"));
  CHECK(meta["n_experiments"] == 4);
  CHECK(meta["n_failed"] == 2);

  // Reloading the stored reports reproduces the same tables.
  const ReportBundle back = load_reports(out.string());
  REQUIRE(back.tables.size() == b.tables.size());
  CHECK(table_to_text(back.tables[0]) == table_to_text(b.tables[0]));
}

TEST_CASE("hierarchical table has the three fixed rows") {
  const auto tables = build_tables({entry("hierarchical", "transformer", "A+L THEN P", 0.98746, 0.9719),
                                    entry("hierarchical", "transformer", "A+P THEN L", 0.5, 0.25)});
  REQUIRE(tables.size() == 1);
  const Table& t = tables[0];
  CHECK(t.rows == std::vector<std::string>{"P+A THEN L", "A+L THEN P", "L+P THEN A"});
  CHECK(t.cells[0] == std::vector<std::string>{"50.00", "25.00"});
  CHECK(t.cells[1] == std::vector<std::string>{"98.75", "97.19"});
  CHECK(t.cells[2] == std::vector<std::string>{kFailedCell, kFailedCell});
  CHECK(table_to_csv(t).rfind("Fusion order,Accuracy,Macro F1\n", 0) == 0);
  CHECK(table_to_text(t).rfind("Scores are in %\n", 0) == 0);
}

TEST_CASE("grouped layouts place entries by topology") {
  const auto tables = build_tables({entry("concat", "cnn", "A+L", 0.9, 0.8), entry("concat", "rnn", "A+L+P", 0.7, 0.6),
                                    entry("concat", "cnn", "L+P", 0.5, 0.4)});
  const Table& t = tables[0];
  CHECK(t.groups == std::vector<std::string>{"L+A", "A+P", "L+P", "A+L+P"});
  CHECK(t.rows == std::vector<std::string>{"RNN", "CNN"});
  CHECK(t.cells[1] == std::vector<std::string>{"90.00", "80.00", "", "", "50.00", "40.00", "", ""});
  CHECK(table_to_csv(t).find("L+A Accuracy,L+A F1") != std::string::npos);
}

TEST_CASE("an empty bundle writes metadata only") {
  const fs::path out = temp_dir("empty");
  emit_reports(ReportBundle{}, out.string());
  CHECK(fs::exists(out / "metadata.json"));
  CHECK_FALSE(fs::exists(out / "tables"));
  CHECK_FALSE(fs::exists(out / "reports"));
  CHECK(json::parse(slurp(out / "metadata.json"))["n_experiments"] == 0);
}

TEST_CASE("confusion rendering lists actual rows and predicted columns") {
  eval::ConfusionMatrix cm;
  cm.counts = {{{13, 0}, {1, 29}}};
  const std::string text = confusion_text(cm, "A+L THEN P");
  CHECK(text.find("13") != std::string::npos);
  CHECK(text.find("29") != std::string::npos);
  const std::string svg = confusion_svg(cm, "A+L THEN P");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find(">29<") != std::string::npos);
}

TEST_CASE("safe names") {
  CHECK(safe_name("A+L THEN P") == "A+L_THEN_P");
  CHECK(safe_name("../x") == ".._x");
  CHECK(safe_name("") == "experiment");
}

TEST_CASE("shipped example configs parse") {
  const fs::path dir = fs::path(COSFUSE_SOURCE_DIR) / "configs";
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    const json j = json::parse(slurp(e.path()));
    if (j.contains("runs")) {
      for (const auto& r : parse_grid(e.path().string())) CHECK(r.error.empty());
    } else {
      CHECK_NOTHROW(parse_config(e.path().string()));
    }
    ++n;
  }
  CHECK(n >= 4);
}
