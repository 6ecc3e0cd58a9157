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
#include <sstream>

#include <json.hpp>

#include "common/error.hpp"
#include "models/models.hpp"

namespace cosfuse::models {

using json = nlohmann::ordered_json;

std::string_view to_string(Encoder e) {
  switch (e) {
    case Encoder::kCnnOnly:
      return "cnn_only";
    case Encoder::kCnnTransformer:
      return "cnn_transformer";
    default:
      return "rnn";
  }
}

std::optional<Encoder> parse_encoder(std::string_view s) {
  if (s == "cnn_only") return Encoder::kCnnOnly;
  if (s == "cnn_transformer") return Encoder::kCnnTransformer;
  if (s == "rnn") return Encoder::kRnn;
  return std::nullopt;
}

std::string_view to_string(FusionTopology::Kind k) {
  switch (k) {
    case FusionTopology::Kind::kIndividual:
      return "individual";
    case FusionTopology::Kind::kConcat:
      return "concat";
    default:
      return "hierarchical";
  }
}

void BranchConfig::validate() const {
  const std::pair<const char*, int> sizes[] = {{"conv_filters", conv_filters},   {"conv_kernel", conv_kernel},
                                              {"pool_size", pool_size},         {"attention_heads", attention_heads},
                                              {"ff_dim", ff_dim},               {"rnn_hidden", rnn_hidden},
                                              {"branch_output_dim", branch_output_dim}};
  for (const auto& [key, v] : sizes)
    if (v < 1) throw ConfigError(std::string(key) + ": must be >= 1");
  if (!(encoder_dropout >= 0.0 && encoder_dropout < 1.0)) throw ConfigError("encoder_dropout: must be in [0, 1)");
  if (encoder == Encoder::kCnnTransformer && conv_filters % attention_heads != 0)
    throw ConfigError("attention_heads: " + std::to_string(attention_heads) + " must divide the encoder width (" +
                      std::to_string(conv_filters) + ")");
}

// Topology

FusionTopology FusionTopology::individual(Modality m) { return {Kind::kIndividual, {m}}; }

FusionTopology FusionTopology::concat(std::vector<Modality> ms) { return {Kind::kConcat, std::move(ms)}; }

FusionTopology FusionTopology::hierarchical(Modality a, Modality b, Modality then) {
  return {Kind::kHierarchical, {a, b, then}};
}

namespace {

std::vector<Modality> parse_modality_list(std::string_view s, std::string_view whole) {
  std::vector<Modality> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t plus = s.find('+', start);
    const std::string_view part = s.substr(start, plus == std::string_view::npos ? s.npos : plus - start);
    std::string tok;
    for (char c : part)
      if (c != ' ') tok += c;
    const auto m = adapters::parse_modality(tok);
    if (!m) throw ConfigError("topology '" + std::string(whole) + "': unknown modality '" + tok + "'");
    out.push_back(*m);
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return out;
}

}  // namespace

FusionTopology FusionTopology::parse(std::string_view label) {
  const std::size_t then = label.find(" THEN ");
  FusionTopology t;
  if (then != std::string_view::npos) {
    const auto pair = parse_modality_list(label.substr(0, then), label);
    const auto rest = parse_modality_list(label.substr(then + 6), label);
    if (pair.size() != 2 || rest.size() != 1)
      throw ConfigError("hierarchical topology '" + std::string(label) + "' must read 'X+Y THEN Z'");
    t = hierarchical(pair[0], pair[1], rest[0]);
  } else {
    const auto ms = parse_modality_list(label, label);
    t = ms.size() == 1 ? individual(ms[0]) : concat(ms);
  }
  t.validate();
  return t;
}

std::string FusionTopology::label() const {
  std::string out;
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    if (kind == Kind::kHierarchical && i == 2)
      out += " THEN ";
    else if (i > 0)
      out += "+";
    out += adapters::to_string(modalities[i]);
  }
  return out;
}

void FusionTopology::validate() const {
  std::set<Modality> distinct(modalities.begin(), modalities.end());
  if (distinct.size() != modalities.size()) throw ConfigError("topology '" + label() + "' repeats a modality");
  switch (kind) {
    case Kind::kIndividual:
      if (modalities.size() != 1) throw ConfigError("individual topology takes exactly one modality");
      break;
    case Kind::kConcat:
      if (modalities.size() < 2 || modalities.size() > 3)
        throw ConfigError("concat topology takes 2 or 3 distinct modalities");
      break;
    case Kind::kHierarchical:
      if (modalities.size() != 3) throw ConfigError("hierarchical topology uses all three modalities exactly once");
      break;
  }
}

bool FusionTopology::uses(Modality m) const {
  return std::find(modalities.begin(), modalities.end(), m) != modalities.end();
}

void ModelSpec::validate() const {
  topology.validate();
  for (Modality m : topology.modalities) {
    branch(m).validate();
    if (input(m).dim < 1 || input(m).seq_len < 1)
      throw ConfigError("input shape for modality " + std::string(adapters::to_string(m)) + " is unset");
  }
  if (fusion_dense_dim < 1) throw ConfigError("fusion_dense_dim must be >= 1");
  if (head_dims.empty()) throw ConfigError("head_dims must not be empty");
  for (int d : head_dims)
    if (d < 1) throw ConfigError("head_dims must be positive");
  if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must be in [0, 1)");
}

// JSON

namespace {

json branch_json(const BranchConfig& b) {
  return json{{"encoder", to_string(b.encoder)},     {"conv_filters", b.conv_filters},
              {"conv_kernel", b.conv_kernel},        {"pool_size", b.pool_size},
              {"attention_heads", b.attention_heads}, {"ff_dim", b.ff_dim},
              {"encoder_dropout", b.encoder_dropout}, {"rnn_hidden", b.rnn_hidden},
              {"branch_output_dim", b.branch_output_dim}};
}

BranchConfig branch_from(const json& j) {
  BranchConfig b;
  const auto enc = parse_encoder(j.at("encoder").get<std::string>());
  if (!enc) throw FormatError("unknown encoder in model spec");
  b.encoder = *enc;
  b.conv_filters = j.at("conv_filters");
  b.conv_kernel = j.at("conv_kernel");
  b.pool_size = j.at("pool_size");
  b.attention_heads = j.at("attention_heads");
  b.ff_dim = j.at("ff_dim");
  b.encoder_dropout = j.at("encoder_dropout");
  b.rnn_hidden = j.at("rnn_hidden");
  b.branch_output_dim = j.at("branch_output_dim");
  return b;
}

}  // namespace

std::string spec_to_json(const ModelSpec& spec) {
  json j;
  j["topology"] = spec.topology.label();
  j["topology_kind"] = to_string(spec.topology.kind);
  json branches = json::object();
  json inputs = json::object();
  for (Modality m : adapters::kAllModalities) {
    const std::string key(adapters::to_string(m));
    branches[key] = branch_json(spec.branch(m));
    inputs[key] = json{{"dim", spec.input(m).dim}, {"seq_len", spec.input(m).seq_len}};
  }
  j["branches"] = branches;
  j["inputs"] = inputs;
  j["fusion_dense_dim"] = spec.fusion_dense_dim;
  j["head_dims"] = spec.head_dims;
  j["n_classes"] = spec.n_classes;
  j["dropout_rate"] = spec.dropout_rate;
  j["zero_init_output"] = spec.zero_init_output;
  j["full_precision"] = spec.full_precision;
  return j.dump(2);
}

ModelSpec spec_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ModelSpec s;
    s.topology = FusionTopology::parse(j.at("topology").get<std::string>());
    for (Modality m : adapters::kAllModalities) {
      const std::string key(adapters::to_string(m));
      s.branches[static_cast<int>(m)] = branch_from(j.at("branches").at(key));
      s.inputs[static_cast<int>(m)] = {j.at("inputs").at(key).at("dim"), j.at("inputs").at(key).at("seq_len")};
    }
    s.fusion_dense_dim = j.at("fusion_dense_dim");
    s.head_dims = j.at("head_dims").get<std::vector<int>>();
    s.n_classes = j.at("n_classes");
    s.dropout_rate = j.at("dropout_rate");
    s.zero_init_output = j.at("zero_init_output");
    s.full_precision = j.value("full_precision", false);
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid model spec: ") + e.what());
  }
}

// Description graph

const GraphNode& ModelGraph::node(std::string_view name) const {
  for (const auto& n : nodes)
    if (n.name == name) return n;
  throw Error(ErrorCode::kArgument, "no graph node named '" + std::string(name) + "'");
}

bool ModelGraph::has(std::string_view name) const {
  return std::any_of(nodes.begin(), nodes.end(), [&](const GraphNode& n) { return n.name == name; });
}

std::set<std::pair<std::string, std::string>> ModelGraph::edges() const {
  std::set<std::pair<std::string, std::string>> e;
  for (const auto& n : nodes)
    for (const auto& in : n.inputs) e.emplace(in, n.name);
  return e;
}

std::int64_t ModelGraph::total_params() const {
  std::int64_t t = 0;
  for (const auto& n : nodes) t += n.params;
  return t;
}

int ModelGraph::head_input_width() const {
  const auto& head = node("head.dense1");
  return node(head.inputs.at(0)).shape.back();
}

std::string ModelGraph::to_text() const {
  std::ostringstream out;
  for (const auto& n : nodes) {
    out << n.name << " [" << n.op << "] (";
    for (std::size_t i = 0; i < n.shape.size(); ++i) out << (i ? "," : "") << n.shape[i];
    out << ") params=" << n.params;
    if (!n.inputs.empty()) {
      out << " <-";
      for (const auto& in : n.inputs) out << " " << in;
    }
    out << "\n";
  }
  return out.str();
}

namespace {

std::int64_t dense_params(std::int64_t in, std::int64_t out) { return in * out + out; }

std::int64_t encoder_params(std::int64_t w, std::int64_t ff) {
  return 4 * dense_params(w, w) + 2 * (2 * w) + dense_params(w, ff) + dense_params(ff, w);
}

}  // namespace

std::vector<GraphNode> build_branch(const BranchConfig& cfg, int input_dim, int seq_len, const std::string& prefix) {
  cfg.validate();
  if (input_dim < 1 || seq_len < 1) throw ConfigError("branch input shape must be positive");
  std::vector<GraphNode> nodes;
  nodes.push_back({prefix + ".input", "input", {}, {seq_len, input_dim}, 0});
  int width = 0;
  if (cfg.encoder == Encoder::kRnn) {
    nodes.push_back({prefix + ".rnn", "rnn", {prefix + ".input"}, {cfg.rnn_hidden},
                     static_cast<std::int64_t>(input_dim) * cfg.rnn_hidden +
                         static_cast<std::int64_t>(cfg.rnn_hidden) * cfg.rnn_hidden + cfg.rnn_hidden});
    nodes.push_back({prefix + ".project", "dense", {prefix + ".rnn"}, {cfg.branch_output_dim},
                     dense_params(cfg.rnn_hidden, cfg.branch_output_dim)});
    return nodes;
  }
  const int f = cfg.conv_filters;
  nodes.push_back({prefix + ".conv", "conv1d_relu", {prefix + ".input"}, {seq_len, f},
                   static_cast<std::int64_t>(cfg.conv_kernel) * input_dim * f + f});
  const int pooled = std::max(1, seq_len / cfg.pool_size);
  nodes.push_back({prefix + ".pool", "maxpool", {prefix + ".conv"}, {pooled, f}, 0});
  std::string last = prefix + ".pool";
  if (cfg.encoder == Encoder::kCnnTransformer) {
    nodes.push_back({prefix + ".encoder", "transformer_encoder", {last}, {pooled, f}, encoder_params(f, cfg.ff_dim)});
    last = prefix + ".encoder";
  }
  nodes.push_back({prefix + ".mean_pool", "mean_pool", {last}, {f}, 0});
  width = f;
  if (cfg.branch_output_dim != width)
    nodes.push_back({prefix + ".project", "dense", {prefix + ".mean_pool"}, {cfg.branch_output_dim},
                     dense_params(width, cfg.branch_output_dim)});
  return nodes;
}

ModelGraph build_model(const ModelSpec& spec) {
  spec.validate();
  ModelGraph g;
  std::vector<std::string> outs(3);
  for (Modality m : adapters::kAllModalities) {
    if (!spec.topology.uses(m)) continue;
    const std::string prefix(adapters::to_string(m));
    auto nodes = build_branch(spec.branch(m), spec.input(m).dim, spec.input(m).seq_len, prefix);
    outs[static_cast<int>(m)] = nodes.back().name;
    g.nodes.insert(g.nodes.end(), nodes.begin(), nodes.end());
  }
  auto out_of = [&](Modality m) { return outs[static_cast<int>(m)]; };
  auto width_of = [&](const std::string& name) { return g.node(name).shape.back(); };

  const auto& mods = spec.topology.modalities;
  std::string head_in;
  switch (spec.topology.kind) {
    case FusionTopology::Kind::kIndividual:
      head_in = out_of(mods[0]);
      break;
    case FusionTopology::Kind::kConcat: {
      GraphNode c{"fusion.concat", "concat", {}, {0}, 0};
      for (Modality m : mods) {
        c.inputs.push_back(out_of(m));
        c.shape[0] += width_of(out_of(m));
      }
      g.nodes.push_back(c);
      head_in = "fusion.concat";
      break;
    }
    case FusionTopology::Kind::kHierarchical: {
      const int pair_w = width_of(out_of(mods[0])) + width_of(out_of(mods[1]));
      g.nodes.push_back({"fusion.pair_concat", "concat", {out_of(mods[0]), out_of(mods[1])}, {pair_w}, 0});
      g.nodes.push_back({"fusion.dense", "dense_relu", {"fusion.pair_concat"}, {spec.fusion_dense_dim},
                         dense_params(pair_w, spec.fusion_dense_dim)});
      g.nodes.push_back({"fusion.concat", "concat", {"fusion.dense", out_of(mods[2])},
                         {spec.fusion_dense_dim + width_of(out_of(mods[2]))}, 0});
      head_in = "fusion.concat";
      break;
    }
  }
  int in_w = width_of(head_in);
  std::string prev = head_in;
  for (std::size_t i = 0; i < spec.head_dims.size(); ++i) {
    const std::string name = "head.dense" + std::to_string(i + 1);
    g.nodes.push_back({name, "dense_relu_dropout", {prev}, {spec.head_dims[i]}, dense_params(in_w, spec.head_dims[i])});
    in_w = spec.head_dims[i];
    prev = name;
  }
  g.nodes.push_back({"head.output", "dense_softmax", {prev}, {spec.n_classes}, dense_params(in_w, spec.n_classes)});
  return g;
}

// Model

Model::Model(ModelSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)), graph_(build_model(spec_)) {
  Rng init(init_seed);
  for (Modality m : adapters::kAllModalities) {
    if (!spec_.topology.uses(m)) continue;
    const BranchConfig& cfg = spec_.branch(m);
    const std::string prefix(adapters::to_string(m));
    const int d = spec_.input(m).dim;
    Branch b;
    b.modality = m;
    if (cfg.encoder == Encoder::kRnn) {
      b.net.add(std::make_unique<SimpleRnn>(prefix + ".rnn", d, cfg.rnn_hidden, init, false));
      b.net.add(std::make_unique<Dense>(prefix + ".project", cfg.rnn_hidden, cfg.branch_output_dim, init));
    } else {
      b.net.add(std::make_unique<Conv1D>(prefix + ".conv", d, cfg.conv_filters, cfg.conv_kernel, init, false,
                                              !spec_.full_precision));
      b.net.add(std::make_unique<Relu>());
      b.net.add(std::make_unique<MaxPool1D>(cfg.pool_size));
      if (cfg.encoder == Encoder::kCnnTransformer) {
        b.net.add(std::make_unique<PositionalEncoding>());
        b.net.add(std::make_unique<TransformerEncoderLayer>(prefix + ".encoder", cfg.conv_filters,
                                                            cfg.attention_heads, cfg.ff_dim, cfg.encoder_dropout,
                                                            init));
      }
      b.net.add(std::make_unique<TemporalMeanPool>());
      if (cfg.branch_output_dim != cfg.conv_filters)
        b.net.add(std::make_unique<Dense>(prefix + ".project", cfg.conv_filters, cfg.branch_output_dim, init));
    }
    b.width = cfg.branch_output_dim;
    branches_.push_back(std::move(b));
  }
  const auto& mods = spec_.topology.modalities;
  int head_in = 0;
  if (spec_.topology.kind == FusionTopology::Kind::kHierarchical) {
    const int pair_w = branch_for(mods[0]).width + branch_for(mods[1]).width;
    fusion_dense_ = std::make_unique<Dense>("fusion.dense", pair_w, spec_.fusion_dense_dim, init);
    head_in = spec_.fusion_dense_dim + branch_for(mods[2]).width;
  } else {
    for (Modality m : mods) head_in += branch_for(m).width;
  }
  int in_w = head_in;
  for (std::size_t i = 0; i < spec_.head_dims.size(); ++i) {
    head_.add(std::make_unique<Dense>("head.dense" + std::to_string(i + 1), in_w, spec_.head_dims[i], init));
    head_.add(std::make_unique<Relu>());
    head_.add(std::make_unique<Dropout>(spec_.dropout_rate));
    in_w = spec_.head_dims[i];
  }
  head_.add(std::make_unique<Dense>("head.output", in_w, spec_.n_classes, init, spec_.zero_init_output));

  for (auto& b : branches_) b.net.collect(params_);
  if (fusion_dense_) fusion_dense_->collect(params_);
  head_.collect(params_);
}

Model::Branch& Model::branch_for(Modality m) {
  for (auto& b : branches_)
    if (b.modality == m) return b;
  throw Error(ErrorCode::kInternal, "missing branch");
}

std::int64_t Model::count_parameters() const {
  std::int64_t n = 0;
  for (const Param* p : params_) n += p->size();
  return n;
}

std::int64_t count_parameters(const Model& model) { return model.count_parameters(); }

void Model::zero_grad() {
  for (Param* p : params_) p->grad.setZero();
}

Matrix Model::forward(const SampleInput& x, bool train, Rng& rng) {
  auto run_branch = [&](Modality m) {
    const Matrix& in = x[static_cast<int>(m)];
    if (in.rows() < 1 || in.cols() != spec_.input(m).dim)
      throw Error(ErrorCode::kArgument, "input for modality " + std::string(adapters::to_string(m)) + " has shape (" +
                                            std::to_string(in.rows()) + "," + std::to_string(in.cols()) +
                                            "), expected width " + std::to_string(spec_.input(m).dim));
    return branch_for(m).net.forward(in, train, rng);
  };
  const auto& mods = spec_.topology.modalities;
  Matrix z;
  if (spec_.topology.kind == FusionTopology::Kind::kHierarchical) {
    const Matrix a = run_branch(mods[0]);
    const Matrix b = run_branch(mods[1]);
    Matrix pair(1, a.cols() + b.cols());
    pair << a, b;
    const Matrix f = fusion_relu_.forward(fusion_dense_->forward(pair, train, rng), train, rng);
    const Matrix c = run_branch(mods[2]);
    z.resize(1, f.cols() + c.cols());
    z << f, c;
    pair_widths_ = {static_cast<int>(a.cols()), static_cast<int>(b.cols())};
    concat_widths_ = {static_cast<int>(f.cols()), static_cast<int>(c.cols())};
  } else {
    std::vector<Matrix> outs;
    int total = 0;
    concat_widths_.clear();
    for (Modality m : mods) {
      outs.push_back(run_branch(m));
      concat_widths_.push_back(static_cast<int>(outs.back().cols()));
      total += concat_widths_.back();
    }
    z.resize(1, total);
    int off = 0;
    for (const auto& o : outs) {
      z.middleCols(off, o.cols()) = o;
      off += static_cast<int>(o.cols());
    }
  }
  return head_.forward(z, train, rng);
}

void Model::backward(const Matrix& dlogits) {
  const Matrix dz = head_.backward(dlogits);
  const auto& mods = spec_.topology.modalities;
  if (spec_.topology.kind == FusionTopology::Kind::kHierarchical) {
    const Matrix df = dz.leftCols(concat_widths_[0]);
    branch_for(mods[2]).net.backward(dz.rightCols(concat_widths_[1]));
    const Matrix dpair = fusion_dense_->backward(fusion_relu_.backward(df));
    branch_for(mods[0]).net.backward(dpair.leftCols(pair_widths_[0]));
    branch_for(mods[1]).net.backward(dpair.rightCols(pair_widths_[1]));
  } else {
    int off = 0;
    for (std::size_t i = 0; i < mods.size(); ++i) {
      branch_for(mods[i]).net.backward(dz.middleCols(off, concat_widths_[i]));
      off += concat_widths_[i];
    }
  }
}

}  // namespace cosfuse::models
