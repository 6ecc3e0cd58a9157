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
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adapters/adapters.hpp"
#include "common/matrix.hpp"
#include "corpus/corpus.hpp"
#include "dsp/dsp.hpp"
#include "models/models.hpp"

namespace cosfuse::eval {

using adapters::Modality;

// counts[actual][predicted], class order control=0, asd=1.
struct ConfusionMatrix {
  std::array<std::array<long, 2>, 2> counts{};

  long total() const { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(const std::vector<int>& actual, const std::vector<int>& predicted);
double accuracy(const ConfusionMatrix& cm);
// Per-class F1 is 0 when precision + recall = 0.
double macro_f1(const ConfusionMatrix& cm);

// Where one modality's per-sample features come from.
struct ProviderConfig {
  enum class Kind { kStub, kDsp, kHandcrafted, kFvecDir, kExternal };
  Kind kind = Kind::kStub;
  // stub
  int dim = 0;  // 0: modality default
  int min_frames = 60;
  int max_frames = 120;
  double class_separation = 0.0;
  std::optional<std::uint64_t> seed;  // defaults to the experiment seed
  // dsp: "mfcc" (T x 39 sequence) or "prosodic" (one 12-value frame)
  std::string features = "mfcc";
  // fvec-dir: <dir>/<sample_id>.fvec
  std::string dir;
  // external
  std::string command;
  double timeout_s = 600.0;
  // Sequence length after pad/truncate; 0: modality default (A/P 100, L 64).
  int seq_len = 0;

  bool operator==(const ProviderConfig&) const = default;
};

std::string_view to_string(ProviderConfig::Kind k);
std::optional<ProviderConfig::Kind> parse_provider_kind(std::string_view s);

struct FoldSpec {
  int k = 5;
  std::uint64_t seed = 0;
  bool subject_disjoint = false;
  std::string file;  // precomputed sample_id,fold CSV; overrides k/seed

  bool operator==(const FoldSpec&) const = default;
};

struct ExperimentConfig {
  std::string name;
  std::string manifest;
  FoldSpec folds;
  std::map<Modality, ProviderConfig> providers;
  // transformer | cnn | rnn | svm_rbf | random_forest | knn | gaussian_nb | decision_tree
  std::string model = "transformer";
  models::FusionTopology topology;
  models::TrainConfig train;
  models::BranchConfig branch;
  int fusion_dense_dim = 120;
  std::vector<int> head_dims = {128, 64};
  double dropout_rate = 0.2;
  std::uint64_t seed = 0;
  std::string table;     // report layout this run belongs to; may be empty
  std::string out_dir;   // not part of the digest
  int jobs = 1;          // parallel folds; not part of the digest
  std::string work_dir;  // external extractor scratch; not part of the digest

  bool is_neural() const;
  // Throws ConfigError with the offending key path.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

inline constexpr int kDefaultSeqLenAP = 100;
inline constexpr int kDefaultSeqLenL = 64;
int default_seq_len(Modality m);
int default_stub_dim(Modality m);

// Features for every manifest sample of one modality. Undefined scalars are NaN.
// Throws listing every sample whose features are missing.
std::vector<adapters::EmbeddingSequence> provide_features(const corpus::Manifest& manifest, Modality modality,
                                                          const ProviderConfig& provider, std::uint64_t seed,
                                                          const std::string& work_dir);

// Fold-local preprocessing fitted on training rows only: NaN -> training
// median, then standardization with training mean/stddev.
struct ColumnTransform {
  Vector median;
  Vector mean;
  Vector scale;

  static ColumnTransform fit(const std::vector<const MatrixF*>& train_frames);
  Matrix apply(const MatrixF& frames) const;
};

// Pads with zero rows or truncates the tail.
Matrix pad_or_truncate(const Matrix& x, int seq_len);

struct FoldResult {
  int fold = 0;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  int n_train = 0;
  int n_test = 0;
  int epochs = 0;       // neural models only
  int best_epoch = 0;   // neural models only
  double train_seconds = 0.0;
  std::vector<std::string> test_ids;
  std::vector<int> predicted;
};

struct ExperimentReport {
  std::string name;
  std::string config_digest;
  std::string config_json;  // resolved config echo
  std::string model;
  std::string topology;
  std::string table;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_macro_f1 = 0.0;
  double std_macro_f1 = 0.0;
  ConfusionMatrix pooled_confusion;
  double pooled_accuracy = 0.0;
  double pooled_macro_f1 = 0.0;
  std::string timestamp;
};

// Canonical serialization: stable key order, no wall-clock fields.
std::string report_to_json(const ExperimentReport& r);
// Wall-clock fields (timestamp, per-fold train_seconds).
std::string report_runtime_json(const ExperimentReport& r);
ExperimentReport report_from_json(const std::string& text);

// Resolved config as JSON (defaults filled in), and its digest.
std::string config_to_json(const ExperimentConfig& cfg, bool include_runtime_keys = true);
std::string config_digest(const ExperimentConfig& cfg);

using ProgressFn = std::function<void(const std::string&)>;

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});
// Same, with a manifest already in memory.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const corpus::Manifest& manifest,
                                const ProgressFn& progress = {});

// Group statistics: mean and population stddev of the 12 profile
// fields by subset x group x gender. Undefined values are skipped.
struct StatCell {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct GroupStatsTable {
  std::vector<std::string> features;
  std::vector<std::string> subsets;
  // key: feature, subset, group, gender
  std::map<std::tuple<std::string, std::string, corpus::Group, corpus::Gender>, StatCell> cells;

  const StatCell& at(const std::string& feature, const std::string& subset, corpus::Group g,
                     corpus::Gender s) const;
  std::string to_csv() const;
  std::string to_text() const;
};

struct Subset {
  std::string name;
  std::vector<std::size_t> indices;  // manifest indices
};

// The 12 profile fields shown in group statistics.
const std::vector<std::string>& group_stat_features();

GroupStatsTable group_statistics(const corpus::Manifest& manifest,
                                 const std::map<std::string, dsp::ProsodicProfile>& profiles,
                                 const std::vector<Subset>& subsets);

}  // namespace cosfuse::eval
