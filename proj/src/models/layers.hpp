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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "common/matrix.hpp"
#include "common/rng.hpp"

namespace cosfuse::models {

// A trainable tensor with its gradient and Adam moments.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;
  Matrix v;
  // Bumped whenever value is rewritten, so layers may cache derived copies.
  std::uint64_t version = 0;

  Param(std::string n, Eigen::Index rows, Eigen::Index cols);
  Eigen::Index size() const { return value.size(); }
};

void glorot_uniform(Matrix& w, double fan_in, double fan_out, Rng& rng);

// Layers cache what backward() needs from the most recent forward() call, so
// one instance handles one sample at a time.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Matrix forward(const Matrix& x, bool train, Rng& rng) = 0;
  // Accumulates parameter gradients and returns d(loss)/d(input).
  virtual Matrix backward(const Matrix& dy) = 0;
  virtual void collect(std::vector<Param*>& out) { (void)out; }
};

using LayerPtr = std::unique_ptr<Layer>;

class Dense : public Layer {
 public:
  Dense(std::string name, int in, int out, Rng& init, bool zero_init = false);
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;
  void collect(std::vector<Param*>& out) override;

 private:
  Param w_, b_;
  Matrix x_;
};

class Relu : public Layer {
 public:
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;

 private:
  Matrix mask_;
};

class Tanh : public Layer {
 public:
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;

 private:
  Matrix y_;
};

// Inverted dropout; identity outside training.
class Dropout : public Layer {
 public:
  explicit Dropout(double rate) : rate_(rate) {}
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;

 private:
  double rate_;
  Matrix mask_;
};

// 1-D convolution over time with "same" zero padding; x is T x in.
class Conv1D : public Layer {
 public:
  // fp32: matrix products in float32 (weights and gradients stay float64).
  Conv1D(std::string name, int in, int filters, int kernel, Rng& init, bool input_grad, bool fp32 = false);
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;
  void collect(std::vector<Param*>& out) override;

 private:
  int in_, filters_, kernel_;
  bool input_grad_;
  bool fp32_;
  Param w_, b_;  // w is (kernel * in) x filters
  Matrix x_;
  MatrixF xf_;
  MatrixF zf_, df_, dwf_;  // float32 scratch
  MatrixF wf_;  // stacked float32 kernel, valid for wf_version_
  std::uint64_t wf_version_ = ~std::uint64_t{0};
};

// Non-overlapping max pooling over time; output length max(1, T / pool).
class MaxPool1D : public Layer {
 public:
  explicit MaxPool1D(int pool) : pool_(pool) {}
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;

 private:
  int pool_;
  Eigen::Index in_rows_ = 0;
  std::vector<Eigen::Index> argmax_;
};

class PositionalEncoding : public Layer {
 public:
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override { return dy; }

 private:
  Matrix table_;
};

class LayerNorm : public Layer {
 public:
  LayerNorm(std::string name, int width, double eps = 1e-5);
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;
  void collect(std::vector<Param*>& out) override;

 private:
  double eps_;
  Param gamma_, beta_;
  Matrix xhat_;
  Vector inv_std_;
};

class MultiHeadAttention : public Layer {
 public:
  MultiHeadAttention(std::string name, int width, int heads, Rng& init);
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;
  void collect(std::vector<Param*>& out) override;

 private:
  int width_, heads_;
  Dense q_, k_, v_, o_;
  Matrix qm_, km_, vm_;
  std::vector<Matrix> attn_;
};

// Post-norm encoder layer: LN(x + drop(MHA(x))), then LN(h + drop(FF(h))).
class TransformerEncoderLayer : public Layer {
 public:
  TransformerEncoderLayer(std::string name, int width, int heads, int ff, double dropout, Rng& init);
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;
  void collect(std::vector<Param*>& out) override;

 private:
  MultiHeadAttention mha_;
  Dropout drop1_, drop2_;
  LayerNorm ln1_, ln2_;
  Dense ff1_;
  Relu ff_relu_;
  Dense ff2_;
};

// Mean over time: T x d -> 1 x d.
class TemporalMeanPool : public Layer {
 public:
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;

 private:
  Eigen::Index rows_ = 0;
};

// Elman RNN with tanh; returns the last hidden state (1 x hidden).
class SimpleRnn : public Layer {
 public:
  SimpleRnn(std::string name, int in, int hidden, Rng& init, bool input_grad);
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;
  void collect(std::vector<Param*>& out) override;

 private:
  int hidden_;
  bool input_grad_;
  Param wx_, wh_, b_;
  Matrix x_, h_;  // h_ row t is the state after step t
};

class Sequential : public Layer {
 public:
  void add(LayerPtr layer) { layers_.push_back(std::move(layer)); }
  Matrix forward(const Matrix& x, bool train, Rng& rng) override;
  Matrix backward(const Matrix& dy) override;
  void collect(std::vector<Param*>& out) override;
  bool empty() const { return layers_.empty(); }

 private:
  std::vector<LayerPtr> layers_;
};

// Row-wise softmax, numerically stabilized.
Matrix softmax_rows(const Matrix& logits);

}  // namespace cosfuse::models
