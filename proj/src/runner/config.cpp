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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "common/error.hpp"
#include "runner/runner.hpp"

namespace cosfuse::runner {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string join_path(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  if (!obj.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + join_path(path, key) + "'");
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& path, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  const std::string where = join_path(path, key);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) throw ConfigError(where + ": expected a string");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!it->is_boolean()) throw ConfigError(where + ": expected true or false");
  } else if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) throw ConfigError(where + ": expected an integer");
    if (std::is_unsigned_v<T> && it->is_number_integer() && it->get<long long>() < 0 && !it->is_number_unsigned())
      throw ConfigError(where + ": expected a non-negative integer");
  } else {
    if (!it->is_number()) throw ConfigError(where + ": expected a number");
  }
  return it->get<T>();
}

std::string resolve(const std::string& p, const std::string& base_dir) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_relative()) path = fs::path(base_dir) / path;
  return fs::absolute(path).lexically_normal().string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": invalid JSON: " + e.what());
  }
}

eval::ProviderConfig parse_provider(const json& j, const std::string& path, const std::string& base_dir) {
  using K = eval::ProviderConfig::Kind;
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  const auto kind_name = get<std::string>(j, "kind", path, "");
  if (kind_name.empty()) throw ConfigError(join_path(path, "kind") + ": required");
  const auto kind = eval::parse_provider_kind(kind_name);
  if (!kind)
    throw ConfigError(join_path(path, "kind") + ": unknown provider '" + kind_name +
                      "' (expected stub, dsp, handcrafted, fvec-dir or external)");
  std::set<std::string> allowed = {"kind", "seq_len"};
  switch (*kind) {
    case K::kStub:
      allowed.insert({"dim", "min_frames", "max_frames", "class_separation", "seed"});
      break;
    case K::kDsp:
      allowed.insert("features");
      break;
    case K::kHandcrafted:
      break;
    case K::kFvecDir:
      allowed.insert("dir");
      break;
    case K::kExternal:
      allowed.insert({"command", "timeout_s"});
      break;
  }
  check_keys(j, allowed, path);
  eval::ProviderConfig p;
  p.kind = *kind;
  p.seq_len = get<int>(j, "seq_len", path, 0);
  p.dim = get<int>(j, "dim", path, 0);
  p.min_frames = get<int>(j, "min_frames", path, p.min_frames);
  p.max_frames = get<int>(j, "max_frames", path, p.max_frames);
  p.class_separation = get<double>(j, "class_separation", path, 0.0);
  if (j.contains("seed")) p.seed = get<std::uint64_t>(j, "seed", path, 0);
  p.features = get<std::string>(j, "features", path, p.features);
  p.dir = resolve(get<std::string>(j, "dir", path, ""), base_dir);
  p.command = get<std::string>(j, "command", path, "");
  p.timeout_s = get<double>(j, "timeout_s", path, p.timeout_s);
  if (p.kind == K::kStub && j.contains("dim") && p.dim < 1) throw ConfigError(join_path(path, "dim") + ": must be >= 1");
  return p;
}

}  // namespace

eval::ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  const json j = parse_json(text, "config");
  check_keys(j,
             {"name", "manifest", "folds", "providers", "model", "topology", "train", "branch", "fusion_dense_dim",
              "head_dims", "dropout_rate", "seed", "table", "out", "jobs", "work_dir"},
             "");
  eval::ExperimentConfig c;
  c.seed = get<std::uint64_t>(j, "seed", "", 0);
  c.manifest = resolve(get<std::string>(j, "manifest", "", ""), base_dir);
  if (c.manifest.empty()) throw ConfigError("manifest: required");
  c.model = get<std::string>(j, "model", "", c.model);
  c.table = get<std::string>(j, "table", "", "");
  c.out_dir = resolve(get<std::string>(j, "out", "", ""), base_dir);
  c.work_dir = resolve(get<std::string>(j, "work_dir", "", ""), base_dir);
  c.jobs = get<int>(j, "jobs", "", 1);
  c.fusion_dense_dim = get<int>(j, "fusion_dense_dim", "", c.fusion_dense_dim);
  c.dropout_rate = get<double>(j, "dropout_rate", "", c.dropout_rate);
  if (j.contains("head_dims")) {
    const auto& h = j.at("head_dims");
    if (!h.is_array()) throw ConfigError("head_dims: expected a list of integers");
    c.head_dims.clear();
    for (const auto& v : h) {
      if (!v.is_number_integer()) throw ConfigError("head_dims: expected a list of integers");
      c.head_dims.push_back(v.get<int>());
    }
  }

  c.folds.seed = c.seed;
  if (j.contains("folds")) {
    const auto& f = j.at("folds");
    check_keys(f, {"k", "seed", "subject_disjoint", "file"}, "folds");
    c.folds.k = get<int>(f, "k", "folds", c.folds.k);
    c.folds.seed = get<std::uint64_t>(f, "seed", "folds", c.seed);
    c.folds.subject_disjoint = get<bool>(f, "subject_disjoint", "folds", false);
    c.folds.file = resolve(get<std::string>(f, "file", "folds", ""), base_dir);
  }

  if (j.contains("providers")) {
    const auto& p = j.at("providers");
    if (!p.is_object()) throw ConfigError("providers: expected an object keyed by modality (A, L, P)");
    for (const auto& [key, value] : p.items()) {
      const auto m = adapters::parse_modality(key);
      if (!m) throw ConfigError("unknown key 'providers." + key + "' (modalities are A, L, P)");
      c.providers[*m] = parse_provider(value, "providers." + key, base_dir);
    }
  }

  const auto topo = get<std::string>(j, "topology", "", "");
  if (topo.empty()) throw ConfigError("topology: required (e.g. \"A\", \"L+P\", \"A+L THEN P\")");
  try {
    c.topology = models::FusionTopology::parse(topo);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("topology: ") + e.what());
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, {"learning_rate", "batch_size", "max_epochs", "early_stop_patience", "val_fraction"}, "train");
    c.train.learning_rate = get<double>(t, "learning_rate", "train", c.train.learning_rate);
    c.train.batch_size = get<int>(t, "batch_size", "train", c.train.batch_size);
    c.train.max_epochs = get<int>(t, "max_epochs", "train", c.train.max_epochs);
    c.train.early_stop_patience = get<int>(t, "early_stop_patience", "train", c.train.early_stop_patience);
    c.train.val_fraction = get<double>(t, "val_fraction", "train", c.train.val_fraction);
  }
  if (j.contains("branch")) {
    const auto& b = j.at("branch");
    check_keys(b,
               {"conv_filters", "conv_kernel", "pool_size", "attention_heads", "ff_dim", "encoder_dropout",
                "rnn_hidden", "branch_output_dim"},
               "branch");
    c.branch.conv_filters = get<int>(b, "conv_filters", "branch", c.branch.conv_filters);
    c.branch.conv_kernel = get<int>(b, "conv_kernel", "branch", c.branch.conv_kernel);
    c.branch.pool_size = get<int>(b, "pool_size", "branch", c.branch.pool_size);
    c.branch.attention_heads = get<int>(b, "attention_heads", "branch", c.branch.attention_heads);
    c.branch.ff_dim = get<int>(b, "ff_dim", "branch", c.branch.ff_dim);
    c.branch.encoder_dropout = get<double>(b, "encoder_dropout", "branch", c.branch.encoder_dropout);
    c.branch.rnn_hidden = get<int>(b, "rnn_hidden", "branch", c.branch.rnn_hidden);
    c.branch.branch_output_dim = get<int>(b, "branch_output_dim", "branch", c.branch.branch_output_dim);
  }

  c.name = get<std::string>(j, "name", "", "");
  if (c.name.empty()) c.name = safe_name(c.model + "_" + c.topology.label());
  c.validate();
  return c;
}

eval::ExperimentConfig parse_config(const std::string& path) {
  return parse_config_text(read_file(path), fs::path(path).parent_path().string().empty()
                                                ? "."
                                                : fs::path(path).parent_path().string());
}

eval::ProviderConfig parse_provider_text(const std::string& text, const std::string& base_dir) {
  return parse_provider(parse_json(text, "provider"), "provider", base_dir);
}

std::vector<GridRun> parse_grid_text(const std::string& text, const std::string& base_dir) {
  const json j = parse_json(text, "grid");
  check_keys(j, {"base", "runs"}, "");
  const json base = j.value("base", json::object());
  if (!base.is_object()) throw ConfigError("base: expected an object");
  if (!j.contains("runs") || !j.at("runs").is_array()) throw ConfigError("runs: expected a list");
  std::vector<GridRun> out;
  int i = 0;
  for (const auto& run : j.at("runs")) {
    ++i;
    GridRun g;
    g.label = "run " + std::to_string(i);
    json merged = base;
    std::string dir = base_dir;
    try {
      if (run.is_string()) {
        const std::string path = resolve(run.get<std::string>(), base_dir);
        merged.merge_patch(parse_json(read_file(path), path));
        dir = fs::path(path).parent_path().string();
      } else if (run.is_object()) {
        merged.merge_patch(run);
      } else {
        throw ConfigError("runs[" + std::to_string(i - 1) + "]: expected an object or a config path");
      }
      if (merged.contains("name") && merged["name"].is_string()) g.label = merged["name"];
      if (merged.contains("table") && merged["table"].is_string()) g.table = merged["table"];
      if (merged.contains("model") && merged["model"].is_string()) g.model = merged["model"];
      if (merged.contains("topology") && merged["topology"].is_string()) g.topology = merged["topology"];
      g.config = parse_config_text(merged.dump(), dir);
      g.label = g.config->name;
    } catch (const Error& e) {
      g.error = e.what();
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<GridRun> parse_grid(const std::string& path) {
  const std::string dir = fs::path(path).parent_path().string();
  return parse_grid_text(read_file(path), dir.empty() ? "." : dir);
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-' || c == '+';
    out += ok ? c : '_';
  }
  return out.empty() ? "experiment" : out;
}

}  // namespace cosfuse::runner
