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
#include <future>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "common/matrix.hpp"
#include "corpus/corpus.hpp"

namespace cosfuse::adapters {

enum class Modality : int { kA = 0, kL = 1, kP = 2 };
inline constexpr std::array<Modality, 3> kAllModalities = {Modality::kA, Modality::kL, Modality::kP};

std::string_view to_string(Modality m);
std::optional<Modality> parse_modality(std::string_view s);

// T x d matrix of per-frame (or per-token) vectors for one modality.
struct EmbeddingSequence {
  Modality modality = Modality::kA;
  MatrixF values;
  std::string source;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }
};

// FVEC container: "FVEC", u32 version, u32 ndim, ndim x u32 dims, float32
// payload, all little-endian.
inline constexpr std::uint32_t kFvecVersion = 1;

struct FvecTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

void write_fvec(std::ostream& out, const FvecTensor& t);
// `name` labels format errors.
FvecTensor read_fvec(std::istream& in, const std::string& name);
std::vector<std::uint8_t> encode_fvec(const FvecTensor& t);
FvecTensor decode_fvec(const std::vector<std::uint8_t>& bytes, const std::string& name);

void save_embedding(const EmbeddingSequence& seq, const std::string& path);
// Accepts 1-D (one frame) or 2-D tensors.
EmbeddingSequence load_embedding(const std::string& path, Modality modality = Modality::kA);

// Column-wise mean over frames.
Vector pool_mean(const EmbeddingSequence& seq);

struct StubParams {
  std::array<int, 3> dim = {1024, 768, 1024};  // indexed by Modality
  int min_frames = 60;
  int max_frames = 120;
  double class_separation = 0.0;

  int dim_of(Modality m) const { return dim[static_cast<int>(m)]; }
};

// Frames ~ N(mu_label, I); mu_asd - mu_control = class_separation * u, with
// the unit direction u fixed by (modality, seed).
EmbeddingSequence stub_extract(const std::string& sample_id, corpus::Group label, Modality modality,
                               const StubParams& params, std::uint64_t seed);

// Runs `/bin/sh -c <template>` per sample. {audio}, {transcript} and {out}
// become shell-quoted paths, {modality} its bare letter; the command must
// write an FVEC file to {out}. Results are cached per
// (sample_id, modality, template).
class ExternalExtractor {
 public:
  ExternalExtractor(std::string command_template, std::string work_dir, double timeout_s = 600.0);

  EmbeddingSequence extract(const corpus::SampleRecord& sample, Modality modality);

  // Number of processes spawned so far.
  std::size_t invocations() const;
  const std::string& command_template() const { return template_; }

 private:
  EmbeddingSequence run(const corpus::SampleRecord& sample, Modality modality);

  std::string template_;
  std::string work_dir_;
  double timeout_s_;
  mutable std::mutex mu_;
  std::size_t invocations_ = 0;
  std::map<std::tuple<std::string, int>, std::shared_future<EmbeddingSequence>> cache_;
};

std::string shell_quote(std::string_view s);
std::string expand_template(std::string_view tmpl, const corpus::SampleRecord& sample,
                            Modality modality, const std::string& out_path);

}  // namespace cosfuse::adapters
