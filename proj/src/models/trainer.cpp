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

#include <cmath>
#include <limits>
#include <map>

#include "common/error.hpp"
#include "models/models.hpp"

namespace cosfuse::models {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate: must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs: must be >= 1");
  if (early_stop_patience < 1) throw ConfigError("early_stop_patience: must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 0.5)) throw ConfigError("val_fraction: must be in (0, 0.5)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
    throw ConfigError("beta1/beta2/epsilon: invalid Adam parameters");
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const std::vector<int>& y,
                                                                               double val_fraction, Rng& rng) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& [label, idx] : by_class) {
    rng.shuffle(idx);
    std::size_t n_val = static_cast<std::size_t>(std::floor(static_cast<double>(idx.size()) * val_fraction + 0.5));
    if (n_val >= idx.size()) n_val = idx.size() - 1;
    val_idx.insert(val_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  return {train_idx, val_idx};
}

namespace {

double sample_loss(const Matrix& probs, int label) {
  return -std::log(std::max(probs(0, label), std::numeric_limits<double>::min()));
}

int argmax_row(const Matrix& probs, Eigen::Index r) {
  int best = 0;
  for (Eigen::Index c = 1; c < probs.cols(); ++c)
    if (probs(r, c) > probs(r, best)) best = static_cast<int>(c);
  return best;
}

void check_labels(const Model& model, const std::vector<int>& y) {
  for (int label : y)
    if (label < 0 || label >= model.spec().n_classes)
      throw Error(ErrorCode::kArgument, "label " + std::to_string(label) + " out of range");
}

}  // namespace

double evaluate_loss(Model& model, const std::vector<SampleInput>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kArgument, "x and y differ in length");
  if (x.empty()) return 0.0;
  Rng unused(0);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += sample_loss(softmax_rows(model.forward(x[i], false, unused)), y[i]);
  return total / static_cast<double>(x.size());
}

TrainResult train(Model& model, const std::vector<SampleInput>& x, const std::vector<int>& y, const TrainConfig& cfg) {
  cfg.validate();
  if (x.size() != y.size()) throw Error(ErrorCode::kArgument, "x and y differ in length");
  check_labels(model, y);
  if (std::set<int>(y.begin(), y.end()).size() < 2)
    throw Error(ErrorCode::kValidation, "training set contains a single class");

  Rng rng(cfg.seed);
  auto [train_idx, val_idx] = stratified_split(y, cfg.val_fraction, rng);
  std::vector<SampleInput> val_x;
  std::vector<int> val_y;
  for (std::size_t i : val_idx) {
    val_x.push_back(x[i]);
    val_y.push_back(y[i]);
  }

  auto& params = model.params();
  std::vector<Matrix> best(params.size());
  auto snapshot = [&] {
    for (std::size_t i = 0; i < params.size(); ++i) best[i] = params[i]->value;
  };
  snapshot();

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    double loss_sum = 0.0;
    int correct = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv_bs = 1.0 / static_cast<double>(end - start);
      model.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = train_idx[k];
        const Matrix probs = softmax_rows(model.forward(x[i], true, rng));
        const double l = sample_loss(probs, y[i]);
        if (!std::isfinite(l))
          throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
        loss_sum += l;
        correct += argmax_row(probs, 0) == y[i];
        Matrix d = probs;
        d(0, y[i]) -= 1.0;
        model.backward(d * inv_bs);
      }
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (Param* p : params) {
        p->m = cfg.beta1 * p->m + (1.0 - cfg.beta1) * p->grad;
        p->v = cfg.beta2 * p->v + (1.0 - cfg.beta2) * p->grad.cwiseAbs2();
        p->value.array() -= cfg.learning_rate * (p->m.array() / bc1) / ((p->v.array() / bc2).sqrt() + cfg.epsilon);
        ++p->version;
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_idx.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_idx.size());
    if (!val_x.empty()) {
      Rng unused(0);
      double vl = 0.0;
      int vc = 0;
      for (std::size_t i = 0; i < val_x.size(); ++i) {
        const Matrix probs = softmax_rows(model.forward(val_x[i], false, unused));
        vl += sample_loss(probs, val_y[i]);
        vc += argmax_row(probs, 0) == val_y[i];
      }
      rec.val_loss = vl / static_cast<double>(val_x.size());
      rec.val_accuracy = static_cast<double>(vc) / static_cast<double>(val_x.size());
    } else {
      rec.val_loss = rec.train_loss;
      rec.val_accuracy = rec.train_accuracy;
    }
    if (!std::isfinite(rec.val_loss)) throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    result.history.push_back(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.best_epoch = epoch;
      since_best = 0;
      snapshot();
    } else if (++since_best >= cfg.early_stop_patience) {
      result.early_stopped = true;
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i]->value = best[i];
    ++params[i]->version;
  }
  return result;
}

Matrix predict(Model& model, const std::vector<SampleInput>& x) {
  Matrix out(static_cast<Eigen::Index>(x.size()), model.spec().n_classes);
  Rng unused(0);
  for (std::size_t i = 0; i < x.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = softmax_rows(model.forward(x[i], false, unused));
  return out;
}

std::vector<int> argmax_labels(const Matrix& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) out[static_cast<std::size_t>(r)] = argmax_row(probs, r);
  return out;
}

}  // namespace cosfuse::models
