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

#include <cmath>
#include <filesystem>

#include "adapters/adapters.hpp"
#include "common/error.hpp"
#include "corpus/corpus.hpp"
#include "dsp/dsp.hpp"
#include "evalharness/evalharness.hpp"

using namespace cosfuse;
using namespace cosfuse::eval;
using corpus::Gender;
using corpus::Group;
namespace fs = std::filesystem;

namespace {

// F1 of one class from its confusion counts, written out directly.
double f1(long tp, long fp, long fn) { return tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn); }

ConfusionMatrix cm(long a, long b, long c, long d) {
  ConfusionMatrix m;
  m.counts = {{{a, b}, {c, d}}};
  return m;
}

const corpus::Manifest& small_corpus() {
  static const corpus::Manifest m = [] {
    const fs::path dir = fs::temp_directory_path() / "cosfuse_test_eval_corpus";
    fs::remove_all(dir);
    corpus::SyntheticSpec spec;
    spec.n_asd = 30;
    spec.n_control = 20;
    return corpus::generate_synthetic_corpus(spec, 4, dir.string(), std::string(COSFUSE_SOURCE_DIR) + "/data/lexicon");
  }();
  return m;
}

ProviderConfig stub(double sep, int dim = 8) {
  ProviderConfig p;
  p.kind = ProviderConfig::Kind::kStub;
  p.dim = dim;
  p.min_frames = 10;
  p.max_frames = 20;
  p.class_separation = sep;
  return p;
}

ExperimentConfig tiny_neural_config() {
  ExperimentConfig c;
  c.name = "tiny";
  c.manifest = "(memory)";
  c.model = "transformer";
  c.topology = models::FusionTopology::parse("A+L THEN P");
  for (auto m : adapters::kAllModalities) {
    c.providers[m] = stub(3.0);
    c.providers[m].seq_len = 12;
  }
  c.branch.conv_filters = 8;
  c.branch.attention_heads = 2;
  c.branch.ff_dim = 8;
  c.branch.branch_output_dim = 8;
  c.fusion_dense_dim = 8;
  c.head_dims = {8};
  c.train.max_epochs = 5;
  c.train.batch_size = 8;
  c.folds.k = 3;
  c.seed = 2;
  c.folds.seed = 2;
  return c;
}

}  // namespace

TEST_CASE("metrics on the two reference confusion matrices") {
  // Exact rational values: accuracy 39/43; F1 = 24/28 and 54/58.
  const auto a = cm(12, 1, 3, 27);
  CHECK(accuracy(a) == doctest::Approx(39.0 / 43.0).epsilon(1e-12));
  CHECK(macro_f1(a) == doctest::Approx((f1(12, 3, 1) + f1(27, 1, 3)) / 2.0).epsilon(1e-12));
  CHECK(std::abs(accuracy(a) - 0.90698) < 1e-5);
  CHECK(std::abs(macro_f1(a) - 0.8940887) < 1e-6);

  const auto d = cm(13, 0, 1, 29);
  CHECK(accuracy(d) == doctest::Approx(42.0 / 43.0).epsilon(1e-12));
  CHECK(macro_f1(d) == doctest::Approx((26.0 / 27.0 + 58.0 / 59.0) / 2.0).epsilon(1e-12));
  CHECK(std::abs(accuracy(d) - 0.97674) < 1e-5);
  CHECK(std::abs(macro_f1(d) - 0.97301) < 1e-5);
}

TEST_CASE("confusion from label vectors and degenerate cases") {
  std::vector<int> actual, predicted;
  auto add = [&](int a, int p, int n) {
    for (int i = 0; i < n; ++i) {
      actual.push_back(a);
      predicted.push_back(p);
    }
  };
  add(0, 0, 12);
  add(0, 1, 1);
  add(1, 0, 3);
  add(1, 1, 27);
  CHECK(confusion(actual, predicted) == cm(12, 1, 3, 27));
  CHECK(confusion(actual, predicted).total() == 43);
  // Everything predicted as asd: control F1 is 0 by convention.
  CHECK(macro_f1(cm(0, 10, 0, 20)) == doctest::Approx(f1(20, 10, 0) / 2.0));
  auto sum = cm(1, 2, 3, 4);
  sum += cm(1, 1, 1, 1);
  CHECK(sum == cm(2, 3, 4, 5));
  CHECK_THROWS(confusion({0, 1}, {0}));
}

TEST_CASE("column transform imputes and standardizes from training rows only") {
  MatrixF a(3, 2), b(2, 2);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  a << 1, 10, 2, nan, 3, 30;
  b << 4, 40, nan, 20;
  const ColumnTransform t = ColumnTransform::fit({&a, &b});
  // Column 0 finite values {1,2,3,4}: median 2.5; imputed column {1,2,3,4,2.5}.
  CHECK(t.median[0] == doctest::Approx(2.5));
  CHECK(t.mean[0] == doctest::Approx(12.5 / 5));
  const double var0 = (1 + 4 + 9 + 16 + 6.25) / 5.0 - 2.5 * 2.5;
  CHECK(t.scale[0] == doctest::Approx(1.0 / std::sqrt(var0)));
  // Column 1 finite values {10,20,30,40}: median 25.
  CHECK(t.median[1] == doctest::Approx(25.0));
  const Matrix y = t.apply(a);
  CHECK(y(1, 1) == doctest::Approx((25.0 - t.mean[1]) * t.scale[1]));

  MatrixF constant = MatrixF::Constant(3, 1, 7.0f);
  const ColumnTransform c = ColumnTransform::fit({&constant});
  CHECK(c.scale[0] == 1.0);
  CHECK(c.apply(constant)(0, 0) == 0.0);
}

TEST_CASE("pad or truncate") {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  const Matrix p = pad_or_truncate(x, 5);
  CHECK(p.rows() == 5);
  CHECK(p(2, 1) == 6);
  CHECK(p.row(4).isZero());
  CHECK(pad_or_truncate(x, 2)(1, 0) == 3);
}

TEST_CASE("providers: stub, handcrafted, missing fvec files") {
  const auto& m = small_corpus();
  const auto s = provide_features(m, Modality::kA, stub(1.0, 5), 1, "");
  CHECK(s.size() == m.samples.size());
  CHECK(s[0].dim() == 5);

  ProviderConfig h;
  h.kind = ProviderConfig::Kind::kHandcrafted;
  const auto l = provide_features(m, Modality::kL, h, 1, "");
  CHECK(l[0].dim() == 7);
  CHECK(l[0].frames() == 1);

  const fs::path dir = fs::temp_directory_path() / "cosfuse_test_eval_fvec";
  fs::remove_all(dir);
  fs::create_directories(dir);
  adapters::save_embedding(s[0], (dir / (m.samples[0].sample_id + ".fvec")).string());
  ProviderConfig f;
  f.kind = ProviderConfig::Kind::kFvecDir;
  f.dir = dir.string();
  try {
    provide_features(m, Modality::kA, f, 1, "");
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find(std::to_string(m.samples.size() - 1) + " sample(s)") != std::string::npos);
    CHECK(what.find(m.samples[1].sample_id) != std::string::npos);
    CHECK(what.find(m.samples.back().sample_id) != std::string::npos);
  }

  ProviderConfig d;
  d.kind = ProviderConfig::Kind::kDsp;
  CHECK_THROWS_AS(provide_features(m, Modality::kA, d, 1, ""), Error);  // no audio
}

TEST_CASE("classical experiment: folds cover the corpus once") {
  ExperimentConfig c;
  c.name = "svm";
  c.manifest = "(memory)";
  c.model = "svm_rbf";
  c.topology = models::FusionTopology::parse("A+L+P");
  for (auto m : adapters::kAllModalities) c.providers[m] = stub(4.0);
  c.folds.k = 5;
  const auto r = run_experiment(c, small_corpus());
  REQUIRE(r.folds.size() == 5);
  CHECK(r.pooled_confusion.total() == 50);
  std::set<std::string> ids;
  for (const auto& f : r.folds) {
    CHECK(f.n_train + f.n_test == 50);
    ids.insert(f.test_ids.begin(), f.test_ids.end());
  }
  CHECK(ids.size() == 50);
  CHECK(r.mean_accuracy >= 0.95);
  double mean = 0.0;
  for (const auto& f : r.folds) mean += f.accuracy / 5.0;
  CHECK(r.mean_accuracy == doctest::Approx(mean));
  CHECK(r.pooled_accuracy == doctest::Approx(accuracy(r.pooled_confusion)));
}

TEST_CASE("neural experiment is deterministic and its report round-trips") {
  const ExperimentConfig c = tiny_neural_config();
  const auto a = run_experiment(c, small_corpus());
  const auto b = run_experiment(c, small_corpus());
  CHECK(report_to_json(a) == report_to_json(b));
  CHECK(report_to_json(report_from_json(report_to_json(a))) == report_to_json(a));
  CHECK(a.folds.size() == 3);
  for (const auto& f : a.folds) CHECK(f.epochs <= 5);
  CHECK(report_runtime_json(a).find("train_seconds") != std::string::npos);
  CHECK(report_to_json(a).find("train_seconds") == std::string::npos);
}

TEST_CASE("config digest ignores runtime keys") {
  ExperimentConfig a = tiny_neural_config(), b = a;
  b.out_dir = "/elsewhere";
  b.jobs = 4;
  b.work_dir = "/tmp/x";
  CHECK(config_digest(a) == config_digest(b));
  b.seed = 3;
  CHECK(config_digest(a) != config_digest(b));
}

TEST_CASE("config validation names the key") {
  ExperimentConfig c = tiny_neural_config();
  c.train.batch_size = 0;
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("train.batch_size") != std::string::npos);
  }
  c = tiny_neural_config();
  c.providers.erase(Modality::kP);
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("group statistics: mean and population stddev per cell") {
  corpus::Manifest m;
  std::map<std::string, dsp::ProsodicProfile> profiles;
  const double f0[] = {10, 12, 20, 30, 50};
  const Group g[] = {Group::kAsd, Group::kAsd, Group::kAsd, Group::kControl, Group::kControl};
  for (int i = 0; i < 5; ++i) {
    corpus::SampleRecord s;
    s.sample_id = "s" + std::to_string(i);
    s.subject_id = s.sample_id;
    s.group = g[i];
    s.gender = Gender::kFemale;
    m.samples.push_back(s);
    dsp::ProsodicProfile p;
    p.mean_f0 = f0[i];
    if (i != 2) p.hnr_db = 5.0;
    profiles[s.sample_id] = p;
  }
  const auto t = group_statistics(m, profiles, {{"ENTIRE", {0, 1, 2, 3, 4}}});
  const auto& asd = t.at("mean_f0", "ENTIRE", Group::kAsd, Gender::kFemale);
  CHECK(asd.n == 3);
  CHECK(asd.mean == doctest::Approx(14.0));
  CHECK(asd.stddev == doctest::Approx(std::sqrt((16.0 + 4.0 + 36.0) / 3.0)));
  CHECK(t.at("mean_f0", "ENTIRE", Group::kControl, Gender::kFemale).stddev == doctest::Approx(10.0));
  CHECK(t.at("hnr_db", "ENTIRE", Group::kAsd, Gender::kFemale).n == 2);
  CHECK(t.at("mean_f0", "ENTIRE", Group::kAsd, Gender::kMale).n == 0);
  const std::string text = t.to_text();
  CHECK(text.find("FEMALE") < text.find("MALE\n"));
  CHECK(t.to_csv().find("mean_f0") != std::string::npos);
  CHECK(group_stat_features().size() == 12);
}
