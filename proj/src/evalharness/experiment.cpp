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
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "evalharness/evalharness.hpp"

namespace cosfuse::eval {

using json = nlohmann::ordered_json;

namespace {

bool is_classical_name(const std::string& s) { return models::parse_classical(s).has_value(); }

std::optional<models::Encoder> encoder_for(const std::string& model) {
  if (model == "transformer") return models::Encoder::kCnnTransformer;
  if (model == "cnn") return models::Encoder::kCnnOnly;
  if (model == "rnn") return models::Encoder::kRnn;
  return std::nullopt;
}

}  // namespace

bool ExperimentConfig::is_neural() const { return encoder_for(model).has_value(); }

void ExperimentConfig::validate() const {
  if (manifest.empty()) throw ConfigError("manifest: required");
  if (!is_neural() && !is_classical_name(model))
    throw ConfigError("model: unknown model '" + model +
                      "' (expected transformer, cnn, rnn, svm_rbf, random_forest, knn, gaussian_nb or decision_tree)");
  try {
    topology.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("topology: ") + e.what());
  }
  if (!is_neural() && topology.kind == models::FusionTopology::Kind::kHierarchical)
    throw ConfigError("topology: hierarchical fusion needs a neural model (model: " + model + ")");
  for (Modality m : topology.modalities)
    if (!providers.count(m))
      throw ConfigError("topology: modality " + std::string(adapters::to_string(m)) + " has no provider (providers." +
                        std::string(adapters::to_string(m)) + ")");
  for (const auto& [m, p] : providers) {
    const std::string key = "providers." + std::string(adapters::to_string(m));
    using K = ProviderConfig::Kind;
    if (p.kind == K::kStub) {
      if (p.dim < 0) throw ConfigError(key + ".dim: must be >= 1");
      if (p.min_frames < 1 || p.max_frames < p.min_frames)
        throw ConfigError(key + ".min_frames/max_frames: need 1 <= min_frames <= max_frames");
      if (!(p.class_separation >= 0.0)) throw ConfigError(key + ".class_separation: must be >= 0");
    }
    if (p.kind == K::kDsp && p.features != "mfcc" && p.features != "prosodic")
      throw ConfigError(key + ".features: expected 'mfcc' or 'prosodic'");
    if (p.kind == K::kFvecDir && p.dir.empty()) throw ConfigError(key + ".dir: required for fvec-dir");
    if (p.kind == K::kExternal && p.command.find("{out}") == std::string::npos)
      throw ConfigError(key + ".command: must contain {out}");
    if (p.kind == K::kExternal && !(p.timeout_s > 0)) throw ConfigError(key + ".timeout_s: must be > 0");
    if (p.seq_len < 0) throw ConfigError(key + ".seq_len: must be >= 0");
  }
  if (folds.file.empty() && folds.k < 2) throw ConfigError("folds.k: must be >= 2");
  try {
    train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("train.") + e.what());
  }
  try {
    branch.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("branch.") + e.what());
  }
  if (fusion_dense_dim < 1) throw ConfigError("fusion_dense_dim: must be >= 1");
  if (head_dims.empty() || std::any_of(head_dims.begin(), head_dims.end(), [](int d) { return d < 1; }))
    throw ConfigError("head_dims: must be a non-empty list of positive integers");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate: must be in [0, 1)");
  if (jobs < 1) throw ConfigError("jobs: must be >= 1");
}

// Config echo

namespace {

json provider_json(Modality m, const ProviderConfig& p) {
  using K = ProviderConfig::Kind;
  json j;
  j["kind"] = to_string(p.kind);
  switch (p.kind) {
    case K::kStub:
      j["dim"] = p.dim > 0 ? p.dim : default_stub_dim(m);
      j["min_frames"] = p.min_frames;
      j["max_frames"] = p.max_frames;
      j["class_separation"] = p.class_separation;
      if (p.seed) j["seed"] = *p.seed;
      break;
    case K::kDsp:
      j["features"] = p.features;
      break;
    case K::kHandcrafted:
      break;
    case K::kFvecDir:
      j["dir"] = p.dir;
      break;
    case K::kExternal:
      j["command"] = p.command;
      j["timeout_s"] = p.timeout_s;
      break;
  }
  j["seq_len"] = p.seq_len;
  return j;
}

json config_object(const ExperimentConfig& c, bool runtime) {
  json j;
  j["name"] = c.name;
  j["manifest"] = c.manifest;
  json f;
  if (c.folds.file.empty()) {
    f["k"] = c.folds.k;
    f["seed"] = c.folds.seed;
    f["subject_disjoint"] = c.folds.subject_disjoint;
  } else {
    f["file"] = c.folds.file;
  }
  j["folds"] = f;
  json p = json::object();
  for (const auto& [m, prov] : c.providers) p[std::string(adapters::to_string(m))] = provider_json(m, prov);
  j["providers"] = p;
  j["model"] = c.model;
  j["topology"] = c.topology.label();
  j["train"] = json{{"learning_rate", c.train.learning_rate},
                    {"batch_size", c.train.batch_size},
                    {"max_epochs", c.train.max_epochs},
                    {"early_stop_patience", c.train.early_stop_patience},
                    {"val_fraction", c.train.val_fraction}};
  j["branch"] = json{{"conv_filters", c.branch.conv_filters},     {"conv_kernel", c.branch.conv_kernel},
                     {"pool_size", c.branch.pool_size},           {"attention_heads", c.branch.attention_heads},
                     {"ff_dim", c.branch.ff_dim},                 {"encoder_dropout", c.branch.encoder_dropout},
                     {"rnn_hidden", c.branch.rnn_hidden},         {"branch_output_dim", c.branch.branch_output_dim}};
  j["fusion_dense_dim"] = c.fusion_dense_dim;
  j["head_dims"] = c.head_dims;
  j["dropout_rate"] = c.dropout_rate;
  j["seed"] = c.seed;
  j["table"] = c.table;
  if (runtime) {
    j["out"] = c.out_dir;
    j["jobs"] = c.jobs;
    j["work_dir"] = c.work_dir;
  }
  return j;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json cm_json(const ConfusionMatrix& cm) {
  return json::array({json::array({cm.counts[0][0], cm.counts[0][1]}), json::array({cm.counts[1][0], cm.counts[1][1]})});
}

ConfusionMatrix cm_from(const json& j) {
  ConfusionMatrix cm;
  for (int a = 0; a < 2; ++a)
    for (int p = 0; p < 2; ++p) cm.counts[a][p] = j.at(a).at(p).get<long>();
  return cm;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg, bool include_runtime_keys) {
  return config_object(cfg, include_runtime_keys).dump(2);
}

std::string config_digest(const ExperimentConfig& cfg) {
  return "fnv1a64:" + hex64(fnv1a64(config_object(cfg, false).dump()));
}

// Reports

std::string report_to_json(const ExperimentReport& r) {
  json j;
  j["name"] = r.name;
  j["config_digest"] = r.config_digest;
  j["model"] = r.model;
  j["topology"] = r.topology;
  j["table"] = r.table;
  j["seed"] = r.seed;
  j["config"] = r.config_json.empty() ? json::object() : json::parse(r.config_json);
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back(json{{"fold", f.fold},
                         {"n_train", f.n_train},
                         {"n_test", f.n_test},
                         {"confusion", cm_json(f.confusion)},
                         {"accuracy", f.accuracy},
                         {"macro_f1", f.macro_f1},
                         {"epochs", f.epochs},
                         {"best_epoch", f.best_epoch},
                         {"test_ids", f.test_ids},
                         {"predicted", f.predicted}});
  }
  j["folds"] = folds;
  j["mean_accuracy"] = r.mean_accuracy;
  j["std_accuracy"] = r.std_accuracy;
  j["mean_macro_f1"] = r.mean_macro_f1;
  j["std_macro_f1"] = r.std_macro_f1;
  j["pooled"] = json{{"confusion", cm_json(r.pooled_confusion)},
                     {"accuracy", r.pooled_accuracy},
                     {"macro_f1", r.pooled_macro_f1}};
  return j.dump(2) + "\n";
}

std::string report_runtime_json(const ExperimentReport& r) {
  json j;
  j["name"] = r.name;
  j["config_digest"] = r.config_digest;
  j["timestamp"] = r.timestamp;
  json secs = json::array();
  for (const auto& f : r.folds) secs.push_back(f.train_seconds);
  j["train_seconds"] = secs;
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ExperimentReport r;
    r.name = j.at("name");
    r.config_digest = j.at("config_digest");
    r.model = j.at("model");
    r.topology = j.at("topology");
    r.table = j.value("table", "");
    r.seed = j.at("seed");
    r.config_json = j.at("config").dump(2);
    for (const auto& f : j.at("folds")) {
      FoldResult fr;
      fr.fold = f.at("fold");
      fr.n_train = f.at("n_train");
      fr.n_test = f.at("n_test");
      fr.confusion = cm_from(f.at("confusion"));
      fr.accuracy = f.at("accuracy");
      fr.macro_f1 = f.at("macro_f1");
      fr.epochs = f.at("epochs");
      fr.best_epoch = f.at("best_epoch");
      fr.test_ids = f.at("test_ids").get<std::vector<std::string>>();
      fr.predicted = f.at("predicted").get<std::vector<int>>();
      r.folds.push_back(std::move(fr));
    }
    r.mean_accuracy = j.at("mean_accuracy");
    r.std_accuracy = j.at("std_accuracy");
    r.mean_macro_f1 = j.at("mean_macro_f1");
    r.std_macro_f1 = j.at("std_macro_f1");
    r.pooled_confusion = cm_from(j.at("pooled").at("confusion"));
    r.pooled_accuracy = j.at("pooled").at("accuracy");
    r.pooled_macro_f1 = j.at("pooled").at("macro_f1");
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid experiment report: ") + e.what());
  }
}

// Driver

namespace {

struct ModalData {
  Modality modality;
  std::vector<adapters::EmbeddingSequence> seqs;
  int seq_len_override = 0;
};

FoldResult run_fold(const ExperimentConfig& cfg, const corpus::Manifest& manifest,
                    const corpus::FoldAssignment& folds, const std::vector<ModalData>& data, int fold) {
  const auto train_idx = folds.train_indices(manifest, fold);
  const auto test_idx = folds.test_indices(manifest, fold);
  if (train_idx.empty() || test_idx.empty())
    throw ConfigError("fold " + std::to_string(fold) + " has an empty train or test set");
  std::vector<int> y_train, y_test;
  for (auto i : train_idx) y_train.push_back(static_cast<int>(manifest.samples[i].group));
  for (auto i : test_idx) y_test.push_back(static_cast<int>(manifest.samples[i].group));

  const std::uint64_t fold_seed = cfg.seed + static_cast<std::uint64_t>(fold);
  FoldResult res;
  res.fold = fold;
  res.n_train = static_cast<int>(train_idx.size());
  res.n_test = static_cast<int>(test_idx.size());
  for (auto i : test_idx) res.test_ids.push_back(manifest.samples[i].sample_id);

  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.is_neural()) {
    models::ModelSpec spec;
    spec.topology = cfg.topology;
    for (auto& b : spec.branches) {
      b = cfg.branch;
      b.encoder = *encoder_for(cfg.model);
    }
    spec.fusion_dense_dim = cfg.fusion_dense_dim;
    spec.head_dims = cfg.head_dims;
    spec.dropout_rate = cfg.dropout_rate;

    std::vector<models::SampleInput> x_train(train_idx.size()), x_test(test_idx.size());
    for (const auto& md : data) {
      std::vector<const MatrixF*> frames;
      int max_len = 1;
      for (auto i : train_idx) {
        frames.push_back(&md.seqs[i].values);
        max_len = std::max(max_len, static_cast<int>(md.seqs[i].frames()));
      }
      const int t_len = md.seq_len_override > 0 ? md.seq_len_override : std::min(default_seq_len(md.modality), max_len);
      const ColumnTransform tr = ColumnTransform::fit(frames);
      const int mi = static_cast<int>(md.modality);
      spec.inputs[mi] = {static_cast<int>(md.seqs.front().dim()), t_len};
      for (std::size_t k = 0; k < train_idx.size(); ++k)
        x_train[k][mi] = pad_or_truncate(tr.apply(md.seqs[train_idx[k]].values), t_len);
      for (std::size_t k = 0; k < test_idx.size(); ++k)
        x_test[k][mi] = pad_or_truncate(tr.apply(md.seqs[test_idx[k]].values), t_len);
    }
    models::Model model(spec, mix_seed(fold_seed, 0x1417));
    models::TrainConfig tc = cfg.train;
    tc.seed = fold_seed;
    const auto tr = models::train(model, x_train, y_train, tc);
    res.epochs = static_cast<int>(tr.history.size());
    res.best_epoch = tr.best_epoch;
    res.predicted = models::argmax_labels(models::predict(model, x_test));
  } else {
    // Classical models see one pooled vector per sample (modalities concatenated).
    Eigen::Index width = 0;
    for (const auto& md : data) width += md.seqs.front().dim();
    auto pooled = [&](std::size_t i) {
      MatrixF v(1, width);
      Eigen::Index off = 0;
      for (const auto& md : data) {
        const auto& s = md.seqs[i].values;
        v.block(0, off, 1, s.cols()) = s.colwise().mean();
        off += s.cols();
      }
      return v;
    };
    std::vector<MatrixF> train_vecs, test_vecs;
    for (auto i : train_idx) train_vecs.push_back(pooled(i));
    for (auto i : test_idx) test_vecs.push_back(pooled(i));
    std::vector<const MatrixF*> ptrs;
    for (const auto& v : train_vecs) ptrs.push_back(&v);
    const ColumnTransform tr = ColumnTransform::fit(ptrs);
    Matrix xtr(static_cast<Eigen::Index>(train_vecs.size()), width), xte(static_cast<Eigen::Index>(test_vecs.size()), width);
    for (std::size_t k = 0; k < train_vecs.size(); ++k) xtr.row(static_cast<Eigen::Index>(k)) = tr.apply(train_vecs[k]);
    for (std::size_t k = 0; k < test_vecs.size(); ++k) xte.row(static_cast<Eigen::Index>(k)) = tr.apply(test_vecs[k]);
    models::ClassicalSpec cs{*models::parse_classical(cfg.model), fold_seed};
    res.predicted = models::classical_fit_predict(cs, xtr, y_train, xte);
  }
  res.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.confusion = confusion(y_test, res.predicted);
  res.accuracy = accuracy(res.confusion);
  res.macro_f1 = macro_f1(res.confusion);
  return res;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double pstd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  return run_experiment(cfg, corpus::load_manifest(cfg.manifest), progress);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const corpus::Manifest& manifest,
                                const ProgressFn& progress) {
  cfg.validate();
  corpus::require_both_groups(manifest);
  std::mutex log_mu;
  auto log = [&](const std::string& msg) {
    if (!progress) return;
    std::lock_guard lock(log_mu);
    progress(msg);
  };

  corpus::FoldAssignment folds;
  if (!cfg.folds.file.empty())
    folds = corpus::load_folds(cfg.folds.file, manifest);
  else if (cfg.folds.subject_disjoint)
    folds = corpus::make_subject_folds(manifest, cfg.folds.k, cfg.folds.seed);
  else
    folds = corpus::make_folds(manifest, cfg.folds.k, cfg.folds.seed);

  std::vector<ModalData> data;
  std::vector<Modality> used(cfg.topology.modalities.begin(), cfg.topology.modalities.end());
  std::sort(used.begin(), used.end());
  for (Modality m : used) {
    const auto& prov = cfg.providers.at(m);
    log("features " + std::string(adapters::to_string(m)) + ": " + std::string(to_string(prov.kind)));
    data.push_back({m, provide_features(manifest, m, prov, cfg.seed, cfg.work_dir), prov.seq_len});
  }

  ExperimentReport rep;
  rep.name = cfg.name;
  rep.config_json = config_to_json(cfg, false);
  rep.config_digest = config_digest(cfg);
  rep.model = cfg.model;
  rep.topology = cfg.topology.label();
  rep.table = cfg.table;
  rep.seed = cfg.seed;
  rep.timestamp = utc_timestamp();
  rep.folds.resize(static_cast<std::size_t>(folds.k));

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(folds.k));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int f = next++; f < folds.k; f = next++) {
      try {
        rep.folds[f] = run_fold(cfg, manifest, folds, data, f);
        log("fold " + std::to_string(f + 1) + "/" + std::to_string(folds.k) +
            ": epochs " + std::to_string(rep.folds[f].epochs) + ", accuracy " + std::to_string(rep.folds[f].accuracy) + ", macro F1 " + std::to_string(rep.folds[f].macro_f1));
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min(cfg.jobs, folds.k);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> accs, f1s;
  for (const auto& f : rep.folds) {
    accs.push_back(f.accuracy);
    f1s.push_back(f.macro_f1);
    rep.pooled_confusion += f.confusion;
  }
  rep.mean_accuracy = mean_of(accs);
  rep.std_accuracy = pstd_of(accs);
  rep.mean_macro_f1 = mean_of(f1s);
  rep.std_macro_f1 = pstd_of(f1s);
  rep.pooled_accuracy = accuracy(rep.pooled_confusion);
  rep.pooled_macro_f1 = macro_f1(rep.pooled_confusion);
  return rep;
}

}  // namespace cosfuse::eval
