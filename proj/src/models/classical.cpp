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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "models/models.hpp"

namespace cosfuse::models {

std::string_view to_string(ClassicalAlgorithm a) {
  switch (a) {
    case ClassicalAlgorithm::kSvmRbf:
      return "svm_rbf";
    case ClassicalAlgorithm::kRandomForest:
      return "random_forest";
    case ClassicalAlgorithm::kKnn:
      return "knn";
    case ClassicalAlgorithm::kGaussianNb:
      return "gaussian_nb";
    default:
      return "decision_tree";
  }
}

std::string_view display_name(ClassicalAlgorithm a) {
  switch (a) {
    case ClassicalAlgorithm::kSvmRbf:
      return "SVM";
    case ClassicalAlgorithm::kRandomForest:
      return "RF";
    case ClassicalAlgorithm::kKnn:
      return "kNN";
    case ClassicalAlgorithm::kGaussianNb:
      return "NB";
    default:
      return "DT";
  }
}

std::optional<ClassicalAlgorithm> parse_classical(std::string_view s) {
  for (auto a : {ClassicalAlgorithm::kSvmRbf, ClassicalAlgorithm::kRandomForest, ClassicalAlgorithm::kKnn,
                 ClassicalAlgorithm::kGaussianNb, ClassicalAlgorithm::kDecisionTree})
    if (s == to_string(a)) return a;
  return std::nullopt;
}

namespace {

std::vector<int> sorted_classes(const std::vector<int>& y) {
  std::vector<int> c(y.begin(), y.end());
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

// SVM: dual coordinate descent with second-order working-set selection.

struct BinarySvm {
  std::vector<double> coef;  // alpha_i * y_i
  double rho = 0.0;
};

BinarySvm fit_binary_svm(const Matrix& k, const std::vector<double>& y, double c) {
  constexpr double kTau = 1e-12;
  constexpr double kEps = 1e-3;
  const std::size_t n = y.size();
  std::vector<double> alpha(n, 0.0), g(n, -1.0);
  auto is_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0); };
  auto is_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c); };
  const std::size_t max_iter = std::max<std::size_t>(10000000, 100 * n);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    double gmax = -INFINITY;
    std::ptrdiff_t i = -1;
    for (std::size_t t = 0; t < n; ++t)
      if (is_up(t) && -y[t] * g[t] >= gmax) {
        if (-y[t] * g[t] > gmax || i < 0) i = static_cast<std::ptrdiff_t>(t);
        gmax = std::max(gmax, -y[t] * g[t]);
      }
    double gmin = INFINITY, best_obj = INFINITY;
    std::ptrdiff_t j = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (!is_low(t)) continue;
      const double v = -y[t] * g[t];
      gmin = std::min(gmin, v);
      if (i < 0) continue;
      const double b = gmax - v;
      if (b > 0) {
        double a = k(i, i) + k(t, t) - 2.0 * k(i, t);
        if (a <= 0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj < best_obj) {
          best_obj = obj;
          j = static_cast<std::ptrdiff_t>(t);
        }
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < kEps) break;

    const double qij = y[i] * y[j] * k(i, j);
    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = k(i, i) + k(j, j) + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double da_i = alpha[i] - old_i, da_j = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t)
      g[t] += y[t] * (y[i] * k(t, i) * da_i + y[j] * k(t, j) * da_j);
  }

  double ub = INFINITY, lb = -INFINITY, sum_free = 0.0;
  int n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * g[t];
    if (alpha[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  BinarySvm m;
  m.rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;
  m.coef.resize(n);
  for (std::size_t t = 0; t < n; ++t) m.coef[t] = alpha[t] * y[t];
  return m;
}

Matrix rbf_kernel(const Matrix& a, const Matrix& b, double gamma) {
  const Vector an = a.rowwise().squaredNorm();
  const Vector bn = b.rowwise().squaredNorm();
  Matrix d = -2.0 * (a * b.transpose());
  d.colwise() += an;
  d.rowwise() += bn.transpose();
  return (-gamma * d.cwiseMax(0.0)).array().exp().matrix();
}

std::vector<int> svm_predict(const Matrix& x, const std::vector<int>& y, const Matrix& test) {
  const auto classes = sorted_classes(y);
  if (classes.size() < 2) throw Error(ErrorCode::kValidation, "svm_rbf needs at least two classes in training data");
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  const double gamma = var > 0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
  const Matrix k = rbf_kernel(x, x, gamma);
  const Matrix kt = rbf_kernel(test, x, gamma);
  auto decision = [&](int positive) {
    std::vector<double> yy(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) yy[i] = y[i] == positive ? 1.0 : -1.0;
    const BinarySvm m = fit_binary_svm(k, yy, 1.0);
    const Vector coef = Eigen::Map<const Vector>(m.coef.data(), static_cast<Eigen::Index>(m.coef.size()));
    return Vector((kt * coef).array() - m.rho);
  };
  std::vector<int> out(static_cast<std::size_t>(test.rows()));
  if (classes.size() == 2) {
    const Vector f = decision(classes[1]);
    for (Eigen::Index r = 0; r < test.rows(); ++r) out[r] = f[r] > 0 ? classes[1] : classes[0];
    return out;
  }
  Matrix scores(test.rows(), static_cast<Eigen::Index>(classes.size()));
  for (std::size_t c = 0; c < classes.size(); ++c) scores.col(static_cast<Eigen::Index>(c)) = decision(classes[c]);
  for (Eigen::Index r = 0; r < test.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = c;
    out[r] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

// CART

struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1, right = -1;
  std::vector<double> proba;
};

class Cart {
 public:
  Cart(const Matrix& x, const std::vector<int>& y, int n_classes, int max_features, Rng& rng)
      : x_(x), y_(y), n_classes_(n_classes), max_features_(max_features), rng_(rng) {}

  void fit(std::vector<std::size_t> idx) {
    nodes_.clear();
    grow(std::move(idx));
  }

  const std::vector<double>& proba(const Eigen::Ref<const RowVector>& row) const {
    int n = 0;
    while (nodes_[n].feature >= 0) n = row[nodes_[n].feature] <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
    return nodes_[n].proba;
  }

 private:
  double gini(const std::vector<double>& counts, double total) const {
    double s = 1.0;
    for (double c : counts) s -= (c / total) * (c / total);
    return s;
  }

  int grow(std::vector<std::size_t> idx) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::vector<double> counts(n_classes_, 0.0);
    for (auto i : idx) counts[y_[i]] += 1.0;
    const double total = static_cast<double>(idx.size());
    std::vector<double> p(n_classes_);
    for (int c = 0; c < n_classes_; ++c) p[c] = counts[c] / total;
    nodes_[id].proba = p;
    const double parent = gini(counts, total);
    if (idx.size() < 2 || parent <= 0.0) return id;

    const int d = static_cast<int>(x_.cols());
    std::vector<int> features(d);
    std::iota(features.begin(), features.end(), 0);
    rng_.shuffle(features);

    double best_imp = parent;
    int best_f = -1;
    double best_t = 0.0;
    std::vector<std::pair<double, int>> vals(idx.size());
    for (int fi = 0; fi < d; ++fi) {
      // Examine max_features features; continue past them only until a valid split exists.
      if (fi >= max_features_ && best_f >= 0) break;
      const int f = features[fi];
      for (std::size_t k = 0; k < idx.size(); ++k) vals[k] = {x_(idx[k], f), y_[idx[k]]};
      std::sort(vals.begin(), vals.end());
      std::vector<double> left(n_classes_, 0.0);
      for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        left[vals[k].second] += 1.0;
        if (vals[k].first == vals[k + 1].first) continue;
        const double nl = static_cast<double>(k + 1), nr = total - nl;
        std::vector<double> right(n_classes_);
        for (int c = 0; c < n_classes_; ++c) right[c] = counts[c] - left[c];
        const double imp = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
        if (imp < best_imp - 1e-12) {
          best_imp = imp;
          best_f = f;
          best_t = 0.5 * (vals[k].first + vals[k + 1].first);
          if (best_t >= vals[k + 1].first) best_t = vals[k].first;
        }
      }
    }
    if (best_f < 0) return id;
    std::vector<std::size_t> li, ri;
    for (auto i : idx) (x_(i, best_f) <= best_t ? li : ri).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    nodes_[id].feature = best_f;
    nodes_[id].threshold = best_t;
    const int l = grow(std::move(li));
    nodes_[id].left = l;
    const int r = grow(std::move(ri));
    nodes_[id].right = r;
    return id;
  }

  const Matrix& x_;
  const std::vector<int>& y_;
  int n_classes_;
  int max_features_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

int argmax_vec(const std::vector<double>& v) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(v.size()); ++c)
    if (v[c] > v[best]) best = c;
  return best;
}

// Labels remapped to 0..C-1 for the tree learners.
std::vector<int> encode(const std::vector<int>& y, const std::vector<int>& classes) {
  std::vector<int> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    out[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), y[i]) - classes.begin());
  return out;
}

std::vector<int> forest_predict(const Matrix& x, const std::vector<int>& y, const Matrix& test, int n_trees,
                                bool bootstrap, int max_features, std::uint64_t seed) {
  const auto classes = sorted_classes(y);
  const auto yc = encode(y, classes);
  const int nc = static_cast<int>(classes.size());
  Rng rng(seed);
  Matrix votes = Matrix::Zero(test.rows(), nc);
  for (int t = 0; t < n_trees; ++t) {
    std::vector<std::size_t> idx(y.size());
    if (bootstrap)
      for (auto& i : idx) i = static_cast<std::size_t>(rng.below(y.size()));
    else
      std::iota(idx.begin(), idx.end(), 0);
    Cart tree(x, yc, nc, max_features, rng);
    tree.fit(std::move(idx));
    for (Eigen::Index r = 0; r < test.rows(); ++r) {
      const auto& p = tree.proba(test.row(r));
      for (int c = 0; c < nc; ++c) votes(r, c) += p[c];
    }
  }
  std::vector<int> out(static_cast<std::size_t>(test.rows()));
  for (Eigen::Index r = 0; r < test.rows(); ++r) {
    std::vector<double> v(votes.row(r).data(), votes.row(r).data() + nc);
    out[r] = classes[argmax_vec(v)];
  }
  return out;
}

std::vector<int> knn_predict(const Matrix& x, const std::vector<int>& y, const Matrix& test, int k) {
  const auto classes = sorted_classes(y);
  const auto yc = encode(y, classes);
  std::vector<int> out(static_cast<std::size_t>(test.rows()));
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), y.size());
  std::vector<std::pair<double, std::size_t>> dist(y.size());
  for (Eigen::Index r = 0; r < test.rows(); ++r) {
    for (std::size_t i = 0; i < y.size(); ++i) dist[i] = {(x.row(i) - test.row(r)).squaredNorm(), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    std::vector<double> votes(classes.size(), 0.0);
    for (std::size_t n = 0; n < kk; ++n) votes[yc[dist[n].second]] += 1.0;
    out[r] = classes[argmax_vec(votes)];
  }
  return out;
}

std::vector<int> gnb_predict(const Matrix& x, const std::vector<int>& y, const Matrix& test) {
  const auto classes = sorted_classes(y);
  const auto yc = encode(y, classes);
  const int nc = static_cast<int>(classes.size());
  const Eigen::Index d = x.cols();
  const RowVector all_mean = x.colwise().mean();
  const double max_var = (x.rowwise() - all_mean).array().square().colwise().mean().maxCoeff();
  const double eps = 1e-9 * max_var;
  Matrix mean = Matrix::Zero(nc, d), var = Matrix::Zero(nc, d);
  std::vector<double> count(nc, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    mean.row(yc[i]) += x.row(i);
    count[yc[i]] += 1.0;
  }
  for (int c = 0; c < nc; ++c) mean.row(c) /= count[c];
  for (std::size_t i = 0; i < y.size(); ++i) var.row(yc[i]) += (x.row(i) - mean.row(yc[i])).cwiseAbs2();
  for (int c = 0; c < nc; ++c) var.row(c) = var.row(c) / count[c];
  var.array() += eps;
  if (!(var.array() > 0).all()) var = var.cwiseMax(std::numeric_limits<double>::min());
  std::vector<int> out(static_cast<std::size_t>(test.rows()));
  for (Eigen::Index r = 0; r < test.rows(); ++r) {
    std::vector<double> ll(nc);
    for (int c = 0; c < nc; ++c) {
      const double prior = std::log(count[c] / static_cast<double>(y.size()));
      ll[c] = prior - 0.5 * ((2.0 * M_PI * var.row(c).array()).log().sum() +
                             ((test.row(r) - mean.row(c)).array().square() / var.row(c).array()).sum());
    }
    out[r] = classes[argmax_vec(ll)];
  }
  return out;
}

}  // namespace

std::vector<int> classical_fit_predict(const ClassicalSpec& spec, const Matrix& train_x,
                                       const std::vector<int>& train_y, const Matrix& test_x) {
  if (train_x.rows() != static_cast<Eigen::Index>(train_y.size()))
    throw Error(ErrorCode::kArgument, "train_x rows do not match train_y length");
  if (train_y.empty()) throw Error(ErrorCode::kArgument, "empty training set");
  if (test_x.cols() != train_x.cols())
    throw Error(ErrorCode::kArgument, "test vectors have " + std::to_string(test_x.cols()) + " dims, training has " +
                                          std::to_string(train_x.cols()));
  if (!train_x.allFinite() || !test_x.allFinite()) throw NumericError("classical model input has non-finite values");
  const auto classes = sorted_classes(train_y);
  if (classes.size() < 2 && spec.algorithm != ClassicalAlgorithm::kSvmRbf)
    return std::vector<int>(static_cast<std::size_t>(test_x.rows()), classes[0]);
  switch (spec.algorithm) {
    case ClassicalAlgorithm::kSvmRbf:
      return svm_predict(train_x, train_y, test_x);
    case ClassicalAlgorithm::kRandomForest: {
      const int mtry = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(train_x.cols()))));
      return forest_predict(train_x, train_y, test_x, 100, true, mtry, spec.seed);
    }
    case ClassicalAlgorithm::kKnn:
      return knn_predict(train_x, train_y, test_x, 5);
    case ClassicalAlgorithm::kGaussianNb:
      return gnb_predict(train_x, train_y, test_x);
    case ClassicalAlgorithm::kDecisionTree:
      return forest_predict(train_x, train_y, test_x, 1, false, static_cast<int>(train_x.cols()), spec.seed);
  }
  throw Error(ErrorCode::kInternal, "unhandled classical algorithm");
}

}  // namespace cosfuse::models
