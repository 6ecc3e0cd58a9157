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
#include <set>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "models/models.hpp"
#include "../support/gradcheck.hpp"

using namespace cosfuse;
using namespace cosfuse::models;
namespace ts = cosfuse::testsupport;

namespace {

ModelSpec default_spec(const std::string& topology) {
  ModelSpec s;
  s.topology = FusionTopology::parse(topology);
  s.inputs = {InputShape{1024, 100}, InputShape{768, 100}, InputShape{1024, 100}};
  return s;
}

// Two-blob data with one frame-sequence per modality.
void blobs(const ModelSpec& spec, int n, double sep, std::uint64_t seed, std::vector<SampleInput>& xs,
           std::vector<int>& ys) {
  Rng rng(seed);
  xs.clear();
  ys.clear();
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    SampleInput x;
    for (int m = 0; m < 3; ++m) {
      x[m].resize(spec.inputs[m].seq_len, spec.inputs[m].dim);
      for (Eigen::Index k = 0; k < x[m].size(); ++k) x[m](k) = rng.normal() + (y ? sep : -sep) * 0.5;
    }
    xs.push_back(x);
    ys.push_back(y);
  }
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& y) {
  int ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += pred[i] == y[i];
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("topology labels parse and print") {
  CHECK(FusionTopology::parse("A").label() == "A");
  CHECK(FusionTopology::parse("L+A").kind == FusionTopology::Kind::kConcat);
  const auto h = FusionTopology::parse("P+A THEN L");
  CHECK(h.kind == FusionTopology::Kind::kHierarchical);
  CHECK(h.label() == "P+A THEN L");
  CHECK(h.modalities == std::vector<Modality>{Modality::kP, Modality::kA, Modality::kL});
  CHECK_THROWS_AS(FusionTopology::parse("A+A"), ConfigError);
  CHECK_THROWS_AS(FusionTopology::parse("A+L THEN L"), ConfigError);
  CHECK_THROWS_AS(FusionTopology::parse("X"), ConfigError);
}

TEST_CASE("hierarchical graph widths and parameter counts") {
  const ModelSpec s = default_spec("A+L THEN P");
  const ModelGraph g = build_model(s);
  const int branch = s.branch(Modality::kA).branch_output_dim;
  // Head input: fusion dense output plus the third branch.
  CHECK(g.head_input_width() == s.fusion_dense_dim + branch);
  CHECK(g.head_input_width() == 184);
  // Dense over the concatenated pair: (2 * 64) * 120 weights + 120 biases.
  CHECK(g.node("fusion.dense").params == (2 * branch) * s.fusion_dense_dim + s.fusion_dense_dim);
  CHECK(g.node("fusion.dense").params == 15480);
  // Kernel 3 over 1024 input channels into 64 filters, plus biases.
  const auto& bc = s.branch(Modality::kA);
  CHECK(g.node("A.conv").params == std::int64_t{bc.conv_kernel} * 1024 * bc.conv_filters + bc.conv_filters);
  CHECK(g.node("A.conv").params == 196672);
  CHECK(g.node("L.conv").params == 3 * 768 * 64 + 64);
}

TEST_CASE("the three hierarchical orders have pairwise distinct wiring") {
  std::vector<std::set<std::pair<std::string, std::string>>> edges;
  for (const char* t : {"P+A THEN L", "A+L THEN P", "L+P THEN A"}) edges.push_back(build_model(default_spec(t)).edges());
  CHECK(edges[0] != edges[1]);
  CHECK(edges[1] != edges[2]);
  CHECK(edges[0] != edges[2]);
  // In "A+L THEN P" the pair feeds the fusion dense and P joins afterwards.
  CHECK(edges[1].count({"A.mean_pool", "fusion.pair_concat"}) == 1);
  CHECK(edges[1].count({"P.mean_pool", "fusion.concat"}) == 1);
}

TEST_CASE("graph parameter totals agree with the instantiated model") {
  for (const char* t : {"A", "L+P", "A+L+P", "A+L THEN P"}) {
    ModelSpec s = ts::tiny_transformer_spec();
    s.topology = FusionTopology::parse(t);
    Model m(s, 1);
    std::int64_t n = 0;
    for (Param* p : m.params()) n += p->size();
    CHECK(n == build_model(s).total_params());
    CHECK(m.count_parameters() == n);
  }
}

TEST_CASE("spec JSON round-trips") {
  ModelSpec s = default_spec("L+P THEN A");
  s.branches[1].encoder = Encoder::kRnn;
  s.head_dims = {32};
  s.full_precision = true;
  CHECK(spec_from_json(spec_to_json(s)) == s);
}

TEST_CASE("spec validation") {
  ModelSpec s = ts::tiny_transformer_spec();
  s.branches[0].attention_heads = 3;  // 4 filters not divisible by 3
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ts::tiny_transformer_spec();
  s.head_dims.clear();
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("gradient check: hierarchical transformer in float64") {
  const ModelSpec s = ts::tiny_transformer_spec();
  Model m(s, 3);
  const auto xs = ts::random_batch(s, 4, 11);
  const auto r = ts::gradient_check(m, xs, {0, 1, 1, 0});
  MESSAGE("checked " << r.checked << " entries, max relative error " << r.max_rel_error);
  CHECK(r.checked > 200);
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("gradient check: concat RNN and CNN-only branches") {
  ModelSpec s = ts::tiny_transformer_spec();
  s.topology = FusionTopology::parse("A+L+P");
  s.branches[0].encoder = Encoder::kRnn;
  s.branches[0].rnn_hidden = 4;
  s.branches[1].encoder = Encoder::kCnnOnly;
  Model m(s, 5);
  const auto r = ts::gradient_check(m, ts::random_batch(s, 4, 12), {1, 0, 1, 0});
  CHECK(r.checked > 100);
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("float32 input convolution agrees with float64 to single precision") {
  ModelSpec s = ts::tiny_transformer_spec();
  Model exact(s, 7);
  s.full_precision = false;
  Model fast(s, 7);
  Rng rng(0);
  for (const auto& x : ts::random_batch(s, 3, 2)) {
    const Matrix a = exact.forward(x, false, rng);
    const Matrix b = fast.forward(x, false, rng);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("training separates easy data and is deterministic") {
  ModelSpec s = ts::tiny_transformer_spec();
  s.topology = FusionTopology::parse("A+L THEN P");
  std::vector<SampleInput> xs, test_x;
  std::vector<int> ys, test_y;
  blobs(s, 64, 1.5, 1, xs, ys);
  blobs(s, 32, 1.5, 2, test_x, test_y);
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.batch_size = 8;
  cfg.learning_rate = 3e-3;
  cfg.seed = 4;

  Model a(s, 1), b(s, 1);
  const TrainResult ra = train(a, xs, ys, cfg);
  const TrainResult rb = train(b, xs, ys, cfg);
  CHECK(!ra.history.empty());
  CHECK(ra.history.size() == rb.history.size());
  CHECK(ra.history.back().train_loss == rb.history.back().train_loss);
  const Matrix pa = predict(a, test_x);
  CHECK(pa == predict(b, test_x));
  CHECK(accuracy(argmax_labels(pa), test_y) >= 0.9);
  CHECK(evaluate_loss(a, test_x, test_y) < std::log(2.0));
}

TEST_CASE("early stopping restores the best epoch") {
  ModelSpec s = ts::tiny_transformer_spec();
  std::vector<SampleInput> xs;
  std::vector<int> ys;
  blobs(s, 40, 0.0, 3, xs, ys);  // no signal: validation loss stops improving
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.early_stop_patience = 3;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-2;
  Model m(s, 2);
  const TrainResult r = train(m, xs, ys, cfg);
  CHECK(r.early_stopped);
  CHECK(static_cast<int>(r.history.size()) == r.best_epoch + cfg.early_stop_patience);
  double best = 1e300;
  for (const auto& e : r.history) best = std::min(best, e.val_loss);
  CHECK(r.history[r.best_epoch - 1].val_loss == best);
}

TEST_CASE("stratified split keeps class proportions") {
  std::vector<int> y(151, 1);
  y.resize(213, 0);
  Rng rng(1);
  const auto [tr, va] = stratified_split(y, 0.1, rng);
  int va_pos = 0;
  for (auto i : va) va_pos += y[i];
  // round(151 * 0.1) = 15 and round(62 * 0.1) = 6.
  CHECK(va.size() == 21);
  CHECK(va_pos == 15);
  CHECK(tr.size() + va.size() == 213);
  CHECK(argmax_labels((Matrix(2, 2) << 0.5, 0.5, 0.2, 0.8).finished()) == std::vector<int>{0, 1});
}

TEST_CASE("classical models on separable blobs and a hand-checked KNN case") {
  Rng rng(8);
  auto make = [&](int n, Matrix& x, std::vector<int>& y) {
    x.resize(n, 4);
    y.resize(n);
    for (int i = 0; i < n; ++i) {
      y[i] = i % 2;
      for (int c = 0; c < 4; ++c) x(i, c) = rng.normal() + (y[i] ? 2.0 : -2.0);
    }
  };
  Matrix trx, tex;
  std::vector<int> try_, tey;
  make(80, trx, try_);
  make(40, tex, tey);
  for (auto alg : {ClassicalAlgorithm::kSvmRbf, ClassicalAlgorithm::kRandomForest, ClassicalAlgorithm::kKnn,
                   ClassicalAlgorithm::kGaussianNb, ClassicalAlgorithm::kDecisionTree}) {
    const auto pred = classical_fit_predict({alg, 3}, trx, try_, tex);
    CAPTURE(to_string(alg));
    CHECK(accuracy(pred, tey) >= 0.95);
    CHECK(pred == classical_fit_predict({alg, 3}, trx, try_, tex));
  }
  // A decision tree with unlimited depth fits its training set exactly.
  CHECK(classical_fit_predict({ClassicalAlgorithm::kDecisionTree, 0}, trx, try_, trx) == try_);

  // 1-D KNN (k = 5): neighbours of 0.4 are 0,1,-1,2,-2 -> labels 0,0,0,1,0.
  Matrix x(7, 1);
  x << -3, -2, -1, 0, 1, 2, 3;
  const std::vector<int> y = {0, 0, 0, 0, 0, 1, 1};
  Matrix q(2, 1);
  q << 0.4, 2.6;
  // Neighbours of 2.6: 3,2,1,0,-1 -> 1,1,0,0,0 -> 0.
  CHECK(classical_fit_predict({ClassicalAlgorithm::kKnn, 0}, x, y, q) == std::vector<int>{0, 0});
  CHECK(parse_classical("random_forest") == ClassicalAlgorithm::kRandomForest);
  CHECK(display_name(ClassicalAlgorithm::kSvmRbf) == "SVM");
}

TEST_CASE("checkpoints store float32 weights and restore their predictions") {
  const ModelSpec s = ts::tiny_transformer_spec();
  Model m(s, 9);
  const auto xs = ts::random_batch(s, 3, 4);
  const auto path = (std::filesystem::temp_directory_path() / "cosfuse_test.ckpt").string();
  save_checkpoint(m, path);
  auto back = load_checkpoint(path);
  CHECK(back->spec() == s);
  // Oracle: the same model with every weight rounded to float32.
  for (Param* p : m.params()) {
    p->value = p->value.cast<float>().cast<double>();
    ++p->version;
  }
  CHECK(predict(*back, xs) == predict(m, xs));
  CHECK_THROWS_AS(load_checkpoint("/nonexistent.ckpt"), IoError);
}
