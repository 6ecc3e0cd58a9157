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
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adapters/adapters.hpp"
#include "common/matrix.hpp"
#include "models/layers.hpp"

namespace cosfuse::models {

using adapters::Modality;

enum class Encoder { kCnnOnly, kCnnTransformer, kRnn };
std::string_view to_string(Encoder e);
std::optional<Encoder> parse_encoder(std::string_view s);

struct BranchConfig {
  Encoder encoder = Encoder::kCnnTransformer;
  int conv_filters = 64;
  int conv_kernel = 3;
  int pool_size = 2;
  int attention_heads = 4;
  int ff_dim = 128;
  double encoder_dropout = 0.1;
  int rnn_hidden = 50;
  int branch_output_dim = 64;

  // Throws ConfigError on invalid values.
  void validate() const;
  bool operator==(const BranchConfig&) const = default;
};

struct FusionTopology {
  enum class Kind { kIndividual, kConcat, kHierarchical };
  Kind kind = Kind::kIndividual;
  // individual: {m}; concat: 2 or 3 distinct; hierarchical: {pair0, pair1, then}.
  std::vector<Modality> modalities = {Modality::kA};

  static FusionTopology individual(Modality m);
  static FusionTopology concat(std::vector<Modality> ms);
  static FusionTopology hierarchical(Modality a, Modality b, Modality then);
  // "A", "L+A", "P+A THEN L".
  static FusionTopology parse(std::string_view label);

  std::string label() const;
  void validate() const;
  bool uses(Modality m) const;
  bool operator==(const FusionTopology&) const = default;
};

std::string_view to_string(FusionTopology::Kind k);

struct InputShape {
  int dim = 0;
  int seq_len = 0;
  bool operator==(const InputShape&) const = default;
};

struct ModelSpec {
  FusionTopology topology;
  std::array<BranchConfig, 3> branches;  // indexed by Modality
  std::array<InputShape, 3> inputs;      // indexed by Modality; only used modalities matter
  int fusion_dense_dim = 120;
  std::vector<int> head_dims = {128, 64};
  int n_classes = 2;
  double dropout_rate = 0.2;
  bool zero_init_output = false;
  // false: the input convolution runs its matrix products in float32, which
  // roughly halves training time; true: everything in float64.
  bool full_precision = false;

  const BranchConfig& branch(Modality m) const { return branches[static_cast<int>(m)]; }
  const InputShape& input(Modality m) const { return inputs[static_cast<int>(m)]; }
  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

std::string spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const std::string& text);

// Description graph: every block with its inputs, output shape and trainable
// parameter count.
struct GraphNode {
  std::string name;
  std::string op;
  std::vector<std::string> inputs;
  std::vector<int> shape;  // (T, d) for sequences, (d) for vectors
  std::int64_t params = 0;
};

struct ModelGraph {
  std::vector<GraphNode> nodes;

  const GraphNode& node(std::string_view name) const;
  bool has(std::string_view name) const;
  std::set<std::pair<std::string, std::string>> edges() const;
  std::int64_t total_params() const;
  // Width entering the first head dense layer.
  int head_input_width() const;
  std::string to_text() const;
};

// Blocks of one branch encoder; node names are prefixed with the modality.
std::vector<GraphNode> build_branch(const BranchConfig& cfg, int input_dim, int seq_len, const std::string& prefix);
ModelGraph build_model(const ModelSpec& spec);

using SampleInput = std::array<Matrix, 3>;  // indexed by Modality; unused entries empty

class Model {
 public:
  Model(ModelSpec spec, std::uint64_t init_seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelSpec& spec() const { return spec_; }
  const ModelGraph& graph() const { return graph_; }
  const std::vector<Param*>& params() { return params_; }
  std::int64_t count_parameters() const;

  // Returns 1 x n_classes logits.
  Matrix forward(const SampleInput& x, bool train, Rng& rng);
  // Accumulates gradients for the last forward call.
  void backward(const Matrix& dlogits);
  void zero_grad();

 private:
  struct Branch {
    Modality modality;
    Sequential net;
    int width = 0;
  };
  Branch& branch_for(Modality m);

  ModelSpec spec_;
  ModelGraph graph_;
  std::vector<Branch> branches_;
  std::unique_ptr<Dense> fusion_dense_;
  Relu fusion_relu_;
  Sequential head_;
  std::vector<Param*> params_;
  // Forward-pass bookkeeping for backward().
  std::vector<int> concat_widths_;
  std::vector<int> pair_widths_;
};

std::int64_t count_parameters(const Model& model);

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 100;
  int early_stop_patience = 10;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool early_stopped = false;
};

// Mini-batch Adam on softmax cross-entropy with a stratified validation split,
// early stopping on validation loss and best-weight restoration.
TrainResult train(Model& model, const std::vector<SampleInput>& x, const std::vector<int>& y,
                  const TrainConfig& cfg);

// n x n_classes probabilities.
Matrix predict(Model& model, const std::vector<SampleInput>& x);
// Ties go to the lower class index.
std::vector<int> argmax_labels(const Matrix& probs);

// Mean cross-entropy of the model on (x, y) in inference mode.
double evaluate_loss(Model& model, const std::vector<SampleInput>& x, const std::vector<int>& y);

// Stratified split of indices into (train, validation).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const std::vector<int>& y,
                                                                               double val_fraction, Rng& rng);

enum class ClassicalAlgorithm { kSvmRbf, kRandomForest, kKnn, kGaussianNb, kDecisionTree };
std::string_view to_string(ClassicalAlgorithm a);
std::string_view display_name(ClassicalAlgorithm a);
std::optional<ClassicalAlgorithm> parse_classical(std::string_view s);

struct ClassicalSpec {
  ClassicalAlgorithm algorithm = ClassicalAlgorithm::kSvmRbf;
  std::uint64_t seed = 0;
};

// Frozen defaults: svm_rbf C=1, gamma=1/(d*var(X)); random_forest 100 trees,
// sqrt(d) features per split; knn k=5; gaussian_nb var smoothing 1e-9;
// decision_tree Gini, unlimited depth.
std::vector<int> classical_fit_predict(const ClassicalSpec& spec, const Matrix& train_x,
                                       const std::vector<int>& train_y, const Matrix& test_x);

void save_checkpoint(Model& model, const std::string& path);
std::unique_ptr<Model> load_checkpoint(const std::string& path);

}  // namespace cosfuse::models
