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

#include "models/layers.hpp"

#include <cmath>

#include "common/error.hpp"

namespace cosfuse::models {

Param::Param(std::string n, Eigen::Index rows, Eigen::Index cols)
    : name(std::move(n)),
      value(Matrix::Zero(rows, cols)),
      grad(Matrix::Zero(rows, cols)),
      m(Matrix::Zero(rows, cols)),
      v(Matrix::Zero(rows, cols)) {}

void glorot_uniform(Matrix& w, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - mx).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

// Dense

Dense::Dense(std::string name, int in, int out, Rng& init, bool zero_init)
    : w_(name + ".kernel", in, out), b_(name + ".bias", 1, out) {
  if (!zero_init) glorot_uniform(w_.value, in, out, init);
}

Matrix Dense::forward(const Matrix& x, bool, Rng&) {
  x_ = x;
  Matrix y = x * w_.value;
  y.rowwise() += b_.value.row(0);
  return y;
}

Matrix Dense::backward(const Matrix& dy) {
  w_.grad.noalias() += x_.transpose() * dy;
  b_.grad += dy.colwise().sum();
  return dy * w_.value.transpose();
}

void Dense::collect(std::vector<Param*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

// Activations and dropout

Matrix Relu::forward(const Matrix& x, bool, Rng&) {
  mask_ = (x.array() > 0.0).cast<double>().matrix();
  return x.cwiseProduct(mask_);
}

Matrix Relu::backward(const Matrix& dy) { return dy.cwiseProduct(mask_); }

Matrix Tanh::forward(const Matrix& x, bool, Rng&) {
  y_ = x.array().tanh().matrix();
  return y_;
}

Matrix Tanh::backward(const Matrix& dy) { return dy.array() * (1.0 - y_.array().square()); }

Matrix Dropout::forward(const Matrix& x, bool train, Rng& rng) {
  if (!train || rate_ <= 0.0) {
    mask_ = Matrix::Ones(x.rows(), x.cols());
    return x;
  }
  mask_.resize(x.rows(), x.cols());
  const double keep = 1.0 / (1.0 - rate_);
  for (Eigen::Index i = 0; i < mask_.size(); ++i) mask_.data()[i] = rng.uniform() >= rate_ ? keep : 0.0;
  return x.cwiseProduct(mask_);
}

Matrix Dropout::backward(const Matrix& dy) { return dy.cwiseProduct(mask_); }

// Conv1D

Conv1D::Conv1D(std::string name, int in, int filters, int kernel, Rng& init, bool input_grad, bool fp32)
    : in_(in),
      filters_(filters),
      kernel_(kernel),
      input_grad_(input_grad),
      fp32_(fp32),
      w_(name + ".kernel", static_cast<Eigen::Index>(kernel) * in, filters),
      b_(name + ".bias", 1, filters) {
  glorot_uniform(w_.value, static_cast<double>(kernel) * in, static_cast<double>(kernel) * filters, init);
}

// Same-padded convolution as one product: Z = x [W_0 | ... | W_{k-1}], then
// y(r) = b + sum_j Z(r + j - pad, block j). Backward mirrors it with the
// shifted output gradient D, so no im2col buffer is needed.
namespace {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
Mat<S> stack_kernels(const Matrix& w, int kernel, int in, int filters) {
  Mat<S> out(in, static_cast<Eigen::Index>(kernel) * filters);
  for (int j = 0; j < kernel; ++j)
    out.middleCols(static_cast<Eigen::Index>(j) * filters, filters) =
        w.middleRows(static_cast<Eigen::Index>(j) * in, in).template cast<S>();
  return out;
}

// Valid output rows [r0, r0 + n) whose tap j reads input rows [r0 + j - pad, ...).
std::pair<Eigen::Index, Eigen::Index> tap_range(Eigen::Index t, int j, int pad) {
  const Eigen::Index shift = j - pad;
  const Eigen::Index r0 = std::max<Eigen::Index>(0, -shift);
  const Eigen::Index r1 = std::min<Eigen::Index>(t, t - shift);
  return {r0, std::max<Eigen::Index>(0, r1 - r0)};
}

}  // namespace

Matrix Conv1D::forward(const Matrix& x, bool, Rng&) {
  if (x.cols() != in_) throw Error(ErrorCode::kArgument, "conv input width mismatch");
  const Eigen::Index t = x.rows();
  const int pad = (kernel_ - 1) / 2;
  Matrix z;
  if (fp32_) {
    xf_ = x.cast<float>();
    if (wf_version_ != w_.version) {
      wf_ = stack_kernels<float>(w_.value, kernel_, in_, filters_);
      wf_version_ = w_.version;
    }
    zf_.noalias() = xf_ * wf_;
    z = zf_.cast<double>();
  } else {
    x_ = x;
    z.noalias() = x_ * stack_kernels<double>(w_.value, kernel_, in_, filters_);
  }
  Matrix y(t, filters_);
  y.rowwise() = b_.value.row(0);
  for (int j = 0; j < kernel_; ++j) {
    const auto [r0, n] = tap_range(t, j, pad);
    if (n > 0) y.middleRows(r0, n) += z.block(r0 + j - pad, static_cast<Eigen::Index>(j) * filters_, n, filters_);
  }
  return y;
}

Matrix Conv1D::backward(const Matrix& dy) {
  const Eigen::Index t = dy.rows();
  const int pad = (kernel_ - 1) / 2;
  Matrix d = Matrix::Zero(t, static_cast<Eigen::Index>(kernel_) * filters_);
  for (int j = 0; j < kernel_; ++j) {
    const auto [r0, n] = tap_range(t, j, pad);
    if (n > 0) d.block(r0 + j - pad, static_cast<Eigen::Index>(j) * filters_, n, filters_) = dy.middleRows(r0, n);
  }
  Matrix dw;
  if (fp32_) {
    df_ = d.cast<float>();
    dwf_.noalias() = xf_.transpose() * df_;
    dw = dwf_.cast<double>();
  } else {
    dw.noalias() = x_.transpose() * d;
  }
  for (int j = 0; j < kernel_; ++j)
    w_.grad.middleRows(static_cast<Eigen::Index>(j) * in_, in_) +=
        dw.middleCols(static_cast<Eigen::Index>(j) * filters_, filters_);
  b_.grad += dy.colwise().sum();
  if (!input_grad_) return Matrix::Zero(t, in_);
  return d * stack_kernels<double>(w_.value, kernel_, in_, filters_).transpose();
}

void Conv1D::collect(std::vector<Param*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

// Pooling and positions

Matrix MaxPool1D::forward(const Matrix& x, bool, Rng&) {
  in_rows_ = x.rows();
  const Eigen::Index out_rows = std::max<Eigen::Index>(1, x.rows() / pool_);
  Matrix y(out_rows, x.cols());
  argmax_.assign(static_cast<std::size_t>(out_rows * x.cols()), 0);
  for (Eigen::Index i = 0; i < out_rows; ++i) {
    const Eigen::Index lo = i * pool_;
    const Eigen::Index hi = std::min<Eigen::Index>(x.rows(), lo + pool_);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::Index best = lo;
      for (Eigen::Index r = lo + 1; r < hi; ++r)
        if (x(r, c) > x(best, c)) best = r;
      y(i, c) = x(best, c);
      argmax_[static_cast<std::size_t>(i * x.cols() + c)] = best;
    }
  }
  return y;
}

Matrix MaxPool1D::backward(const Matrix& dy) {
  Matrix dx = Matrix::Zero(in_rows_, dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i)
    for (Eigen::Index c = 0; c < dy.cols(); ++c)
      dx(argmax_[static_cast<std::size_t>(i * dy.cols() + c)], c) += dy(i, c);
  return dx;
}

Matrix PositionalEncoding::forward(const Matrix& x, bool, Rng&) {
  if (table_.rows() != x.rows() || table_.cols() != x.cols()) {
    table_.resize(x.rows(), x.cols());
    const double d = static_cast<double>(x.cols());
    for (Eigen::Index t = 0; t < x.rows(); ++t)
      for (Eigen::Index i = 0; i < x.cols(); ++i) {
        const double angle = static_cast<double>(t) / std::pow(10000.0, static_cast<double>(i - i % 2) / d);
        table_(t, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
      }
  }
  return x + table_;
}

Matrix TemporalMeanPool::forward(const Matrix& x, bool, Rng&) {
  rows_ = x.rows();
  return x.colwise().mean();
}

Matrix TemporalMeanPool::backward(const Matrix& dy) {
  Matrix dx(rows_, dy.cols());
  dx.rowwise() = dy.row(0) / static_cast<double>(rows_);
  return dx;
}

// LayerNorm

LayerNorm::LayerNorm(std::string name, int width, double eps)
    : eps_(eps), gamma_(name + ".gamma", 1, width), beta_(name + ".beta", 1, width) {
  gamma_.value.setOnes();
}

Matrix LayerNorm::forward(const Matrix& x, bool, Rng&) {
  const Eigen::Index n = x.cols();
  xhat_.resize(x.rows(), n);
  inv_std_.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().sum() / static_cast<double>(n);
    inv_std_[r] = 1.0 / std::sqrt(var + eps_);
    xhat_.row(r) = (x.row(r).array() - mu) * inv_std_[r];
  }
  Matrix y = xhat_.array().rowwise() * gamma_.value.row(0).array();
  y.rowwise() += beta_.value.row(0);
  return y;
}

Matrix LayerNorm::backward(const Matrix& dy) {
  gamma_.grad += dy.cwiseProduct(xhat_).colwise().sum();
  beta_.grad += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gamma_.value.row(0).array();
  const double n = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double s1 = dxhat.row(r).sum();
    const double s2 = dxhat.row(r).dot(xhat_.row(r));
    dx.row(r) = (inv_std_[r] / n) * (n * dxhat.row(r).array() - s1 - xhat_.row(r).array() * s2);
  }
  return dx;
}

void LayerNorm::collect(std::vector<Param*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

// Attention

MultiHeadAttention::MultiHeadAttention(std::string name, int width, int heads, Rng& init)
    : width_(width),
      heads_(heads),
      q_(name + ".query", width, width, init),
      k_(name + ".key", width, width, init),
      v_(name + ".value", width, width, init),
      o_(name + ".output", width, width, init) {
  if (heads < 1 || width % heads != 0) throw ConfigError("attention heads must divide the model width");
}

Matrix MultiHeadAttention::forward(const Matrix& x, bool train, Rng& rng) {
  qm_ = q_.forward(x, train, rng);
  km_ = k_.forward(x, train, rng);
  vm_ = v_.forward(x, train, rng);
  const int dh = width_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  attn_.resize(static_cast<std::size_t>(heads_));
  Matrix concat(x.rows(), width_);
  for (int h = 0; h < heads_; ++h) {
    const auto qh = qm_.middleCols(h * dh, dh);
    const auto kh = km_.middleCols(h * dh, dh);
    const auto vh = vm_.middleCols(h * dh, dh);
    attn_[h] = softmax_rows((qh * kh.transpose()) * scale);
    concat.middleCols(h * dh, dh).noalias() = attn_[h] * vh;
  }
  return o_.forward(concat, train, rng);
}

Matrix MultiHeadAttention::backward(const Matrix& dy) {
  const Matrix dconcat = o_.backward(dy);
  const int dh = width_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix dq(qm_.rows(), width_), dk(km_.rows(), width_), dv(vm_.rows(), width_);
  for (int h = 0; h < heads_; ++h) {
    const Matrix& a = attn_[h];
    const auto doh = dconcat.middleCols(h * dh, dh);
    const Matrix da = doh * vm_.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh).noalias() = a.transpose() * doh;
    const Vector row_dot = da.cwiseProduct(a).rowwise().sum();
    Matrix ds = a.array() * (da.colwise() - row_dot).array();
    ds *= scale;
    dq.middleCols(h * dh, dh).noalias() = ds * km_.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = ds.transpose() * qm_.middleCols(h * dh, dh);
  }
  Matrix dx = q_.backward(dq);
  dx += k_.backward(dk);
  dx += v_.backward(dv);
  return dx;
}

void MultiHeadAttention::collect(std::vector<Param*>& out) {
  q_.collect(out);
  k_.collect(out);
  v_.collect(out);
  o_.collect(out);
}

TransformerEncoderLayer::TransformerEncoderLayer(std::string name, int width, int heads, int ff, double dropout,
                                                 Rng& init)
    : mha_(name + ".attention", width, heads, init),
      drop1_(dropout),
      drop2_(dropout),
      ln1_(name + ".norm1", width),
      ln2_(name + ".norm2", width),
      ff1_(name + ".ff1", width, ff, init),
      ff2_(name + ".ff2", ff, width, init) {}

Matrix TransformerEncoderLayer::forward(const Matrix& x, bool train, Rng& rng) {
  const Matrix a = drop1_.forward(mha_.forward(x, train, rng), train, rng);
  const Matrix h = ln1_.forward(x + a, train, rng);
  const Matrix f = drop2_.forward(ff2_.forward(ff_relu_.forward(ff1_.forward(h, train, rng), train, rng), train, rng),
                                  train, rng);
  return ln2_.forward(h + f, train, rng);
}

Matrix TransformerEncoderLayer::backward(const Matrix& dy) {
  Matrix dh = ln2_.backward(dy);
  dh += ff1_.backward(ff_relu_.backward(ff2_.backward(drop2_.backward(dh))));
  Matrix dx = ln1_.backward(dh);
  dx += mha_.backward(drop1_.backward(dx));
  return dx;
}

void TransformerEncoderLayer::collect(std::vector<Param*>& out) {
  mha_.collect(out);
  ln1_.collect(out);
  ff1_.collect(out);
  ff2_.collect(out);
  ln2_.collect(out);
}

// RNN

SimpleRnn::SimpleRnn(std::string name, int in, int hidden, Rng& init, bool input_grad)
    : hidden_(hidden),
      input_grad_(input_grad),
      wx_(name + ".kernel", in, hidden),
      wh_(name + ".recurrent_kernel", hidden, hidden),
      b_(name + ".bias", 1, hidden) {
  glorot_uniform(wx_.value, in, hidden, init);
  glorot_uniform(wh_.value, hidden, hidden, init);
}

Matrix SimpleRnn::forward(const Matrix& x, bool, Rng&) {
  x_ = x;
  const Matrix xw = x * wx_.value;
  h_.resize(x.rows(), hidden_);
  RowVector prev = RowVector::Zero(hidden_);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    RowVector z = xw.row(t) + prev * wh_.value + b_.value.row(0);
    h_.row(t) = z.array().tanh().matrix();
    prev = h_.row(t);
  }
  return h_.row(x.rows() - 1);
}

Matrix SimpleRnn::backward(const Matrix& dy) {
  const Eigen::Index t_len = h_.rows();
  Matrix dz_all(t_len, hidden_);
  RowVector dh = dy.row(0);
  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    const RowVector dz = dh.array() * (1.0 - h_.row(t).array().square());
    dz_all.row(t) = dz;
    if (t > 0) wh_.grad.noalias() += h_.row(t - 1).transpose() * dz;
    dh = dz * wh_.value.transpose();
  }
  wx_.grad.noalias() += x_.transpose() * dz_all;
  b_.grad += dz_all.colwise().sum();
  if (!input_grad_) return Matrix::Zero(x_.rows(), x_.cols());
  return dz_all * wx_.value.transpose();
}

void SimpleRnn::collect(std::vector<Param*>& out) {
  out.push_back(&wx_);
  out.push_back(&wh_);
  out.push_back(&b_);
}

// Sequential

Matrix Sequential::forward(const Matrix& x, bool train, Rng& rng) {
  Matrix h = x;
  for (auto& l : layers_) h = l->forward(h, train, rng);
  return h;
}

Matrix Sequential::backward(const Matrix& dy) {
  Matrix d = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) d = (*it)->backward(d);
  return d;
}

void Sequential::collect(std::vector<Param*>& out) {
  for (auto& l : layers_) l->collect(out);
}

}  // namespace cosfuse::models
