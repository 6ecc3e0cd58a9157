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
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "common/error.hpp"
#include "evalharness/evalharness.hpp"
#include "textfeat/textfeat.hpp"

namespace cosfuse::eval {

namespace fs = std::filesystem;

std::string_view to_string(ProviderConfig::Kind k) {
  switch (k) {
    case ProviderConfig::Kind::kStub:
      return "stub";
    case ProviderConfig::Kind::kDsp:
      return "dsp";
    case ProviderConfig::Kind::kHandcrafted:
      return "handcrafted";
    case ProviderConfig::Kind::kFvecDir:
      return "fvec-dir";
    default:
      return "external";
  }
}

std::optional<ProviderConfig::Kind> parse_provider_kind(std::string_view s) {
  using K = ProviderConfig::Kind;
  for (K k : {K::kStub, K::kDsp, K::kHandcrafted, K::kFvecDir, K::kExternal})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

int default_seq_len(Modality m) { return m == Modality::kL ? kDefaultSeqLenL : kDefaultSeqLenAP; }

int default_stub_dim(Modality m) { return adapters::StubParams{}.dim_of(m); }

namespace {

constexpr float kNaN = std::numeric_limits<float>::quiet_NaN();

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

adapters::EmbeddingSequence one_frame(Modality m, const std::vector<std::optional<double>>& values,
                                      std::string source) {
  adapters::EmbeddingSequence seq;
  seq.modality = m;
  seq.values.resize(1, static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    seq.values(0, static_cast<Eigen::Index>(i)) = values[i] ? static_cast<float>(*values[i]) : kNaN;
  seq.source = std::move(source);
  return seq;
}

adapters::EmbeddingSequence dsp_features(const corpus::SampleRecord& s, Modality m, const std::string& which) {
  const dsp::AudioBuffer audio = dsp::load_audio(s.audio_path);
  if (which == "mfcc") {
    const dsp::MfccMatrix mf = dsp::compute_mfcc39(audio);
    adapters::EmbeddingSequence seq;
    seq.modality = m;
    seq.values.resize(static_cast<Eigen::Index>(mf.rows), dsp::MfccMatrix::kCols);
    for (std::size_t r = 0; r < mf.rows; ++r)
      for (std::size_t c = 0; c < dsp::MfccMatrix::kCols; ++c)
        seq.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = static_cast<float>(mf.at(r, c));
    seq.source = "dsp:mfcc39";
    return seq;
  }
  const dsp::ProsodicProfile p = dsp::prosodic_profile(audio);
  const auto names = dsp::ProsodicProfile::field_names();
  const auto fields = p.fields();
  std::vector<std::optional<double>> values;
  for (const auto& f : group_stat_features()) {
    const auto it = std::find(names.begin(), names.end(), f);
    values.push_back(fields[static_cast<std::size_t>(it - names.begin())]);
  }
  return one_frame(m, values, "dsp:prosodic");
}

adapters::EmbeddingSequence handcrafted(const corpus::SampleRecord& s, Modality m) {
  const auto t = textfeat::tokenize(read_text(s.transcript_path));
  const auto f = textfeat::handcrafted_features(t, textfeat::tag_language(t), s.duration_s);
  std::vector<std::optional<double>> values(textfeat::LinguisticHandcrafted::kArity);
  if (f) {
    const auto v = f->values();
    for (std::size_t i = 0; i < v.size(); ++i) values[i] = v[i];
  }
  return one_frame(m, values, "handcrafted:v1");
}

}  // namespace

std::vector<adapters::EmbeddingSequence> provide_features(const corpus::Manifest& manifest, Modality modality,
                                                          const ProviderConfig& provider, std::uint64_t seed,
                                                          const std::string& work_dir) {
  using K = ProviderConfig::Kind;
  std::vector<adapters::EmbeddingSequence> out;
  out.reserve(manifest.samples.size());
  std::vector<std::string> missing;
  std::string first_reason;

  std::unique_ptr<adapters::ExternalExtractor> external;
  if (provider.kind == K::kExternal) {
    const std::string dir = work_dir.empty() ? (fs::temp_directory_path() / "cosfuse_external").string() : work_dir;
    external = std::make_unique<adapters::ExternalExtractor>(provider.command, dir, provider.timeout_s);
  }
  adapters::StubParams stub;
  if (provider.kind == K::kStub) {
    if (provider.dim > 0) stub.dim[static_cast<int>(modality)] = provider.dim;
    stub.min_frames = provider.min_frames;
    stub.max_frames = provider.max_frames;
    stub.class_separation = provider.class_separation;
  }

  for (const auto& s : manifest.samples) {
    try {
      switch (provider.kind) {
        case K::kStub:
          out.push_back(adapters::stub_extract(s.sample_id, s.group, modality, stub, provider.seed.value_or(seed)));
          break;
        case K::kDsp:
          if (s.audio_path.empty()) throw IoError("no audio_path");
          out.push_back(dsp_features(s, modality, provider.features));
          break;
        case K::kHandcrafted:
          if (s.transcript_path.empty()) throw IoError("no transcript_path");
          out.push_back(handcrafted(s, modality));
          break;
        case K::kFvecDir: {
          const std::string path = (fs::path(provider.dir) / (s.sample_id + ".fvec")).string();
          if (!fs::exists(path)) throw IoError("missing '" + path + "'");
          out.push_back(adapters::load_embedding(path, modality));
          break;
        }
        case K::kExternal:
          out.push_back(external->extract(s, modality));
          break;
      }
    } catch (const Error& e) {
      if (missing.empty()) first_reason = e.what();
      missing.push_back(s.sample_id);
      out.emplace_back();
    }
  }
  if (!missing.empty()) {
    std::string ids;
    for (std::size_t i = 0; i < missing.size(); ++i) ids += (i ? ", " : "") + missing[i];
    throw Error(ErrorCode::kValidation, "missing " + std::string(adapters::to_string(modality)) + " features for " +
                                            std::to_string(missing.size()) + " sample(s): " + ids +
                                            " (first error: " + first_reason + ")");
  }
  const Eigen::Index d = out.front().dim();
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].dim() != d)
      throw FormatError("sample '" + manifest.samples[i].sample_id + "' has " + std::to_string(out[i].dim()) + "-d " +
                        std::string(adapters::to_string(modality)) + " features, expected " + std::to_string(d));
  return out;
}

ColumnTransform ColumnTransform::fit(const std::vector<const MatrixF*>& train_frames) {
  if (train_frames.empty()) throw Error(ErrorCode::kArgument, "no training rows to fit a transform");
  const Eigen::Index d = train_frames.front()->cols();
  ColumnTransform t;
  t.median = Vector::Zero(d);
  t.mean = Vector::Zero(d);
  t.scale = Vector::Ones(d);
  std::size_t rows = 0;
  for (const MatrixF* m : train_frames) rows += static_cast<std::size_t>(m->rows());
  std::vector<double> col;
  col.reserve(rows);
  for (Eigen::Index c = 0; c < d; ++c) {
    col.clear();
    for (const MatrixF* m : train_frames)
      for (Eigen::Index r = 0; r < m->rows(); ++r)
        if (std::isfinite((*m)(r, c))) col.push_back((*m)(r, c));
    double med = 0.0;
    if (!col.empty()) {
      const std::size_t mid = col.size() / 2;
      std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(mid), col.end());
      med = col[mid];
      if (col.size() % 2 == 0) med = 0.5 * (med + *std::max_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    t.median[c] = med;
    double sum = 0.0, sq = 0.0;
    for (const MatrixF* m : train_frames)
      for (Eigen::Index r = 0; r < m->rows(); ++r) {
        const double v = std::isfinite((*m)(r, c)) ? (*m)(r, c) : med;
        sum += v;
        sq += v * v;
      }
    const double n = static_cast<double>(rows);
    const double mean = sum / n;
    const double var = std::max(0.0, sq / n - mean * mean);
    t.mean[c] = mean;
    t.scale[c] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return t;
}

Matrix ColumnTransform::apply(const MatrixF& frames) const {
  Matrix x = frames.cast<double>();
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      double v = x(r, c);
      if (!std::isfinite(v)) v = median[c];
      x(r, c) = (v - mean[c]) * scale[c];
    }
  return x;
}

Matrix pad_or_truncate(const Matrix& x, int seq_len) {
  if (seq_len < 1) throw Error(ErrorCode::kArgument, "seq_len must be >= 1");
  Matrix out = Matrix::Zero(seq_len, x.cols());
  const Eigen::Index keep = std::min<Eigen::Index>(seq_len, x.rows());
  out.topRows(keep) = x.topRows(keep);
  return out;
}

}  // namespace cosfuse::eval
