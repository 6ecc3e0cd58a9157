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

#include "common/error.hpp"
#include "evalharness/evalharness.hpp"

namespace cosfuse::eval {

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  for (int a = 0; a < 2; ++a)
    for (int p = 0; p < 2; ++p) counts[a][p] += o.counts[a][p];
  return *this;
}

ConfusionMatrix confusion(const std::vector<int>& actual, const std::vector<int>& predicted) {
  if (actual.size() != predicted.size())
    throw Error(ErrorCode::kArgument, "actual has " + std::to_string(actual.size()) + " labels, predicted has " +
                                          std::to_string(predicted.size()));
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] < 0 || actual[i] > 1 || predicted[i] < 0 || predicted[i] > 1)
      throw Error(ErrorCode::kArgument, "labels must be 0 or 1");
    ++cm.counts[actual[i]][predicted[i]];
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const long n = cm.total();
  if (n <= 0) throw Error(ErrorCode::kArgument, "accuracy of an empty confusion matrix");
  return static_cast<double>(cm.counts[0][0] + cm.counts[1][1]) / static_cast<double>(n);
}

double macro_f1(const ConfusionMatrix& cm) {
  if (cm.total() <= 0) throw Error(ErrorCode::kArgument, "macro F1 of an empty confusion matrix");
  double sum = 0.0;
  for (int c = 0; c < 2; ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    const double fp = static_cast<double>(cm.counts[1 - c][c]);
    const double fn = static_cast<double>(cm.counts[c][1 - c]);
    // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN); zero when the class is never hit.
    const double denom = 2.0 * tp + fp + fn;
    sum += denom > 0.0 && tp > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  return sum / 2.0;
}

}  // namespace cosfuse::eval
