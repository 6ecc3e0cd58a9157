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

#include "adapters/adapters.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace cosfuse::adapters {

EmbeddingSequence stub_extract(const std::string& sample_id, corpus::Group label, Modality modality,
                               const StubParams& params, std::uint64_t seed) {
  const int d = params.dim_of(modality);
  if (d < 1) throw ConfigError("stub dim must be >= 1");
  if (params.min_frames < 1 || params.max_frames < params.min_frames)
    throw ConfigError("stub frame range must satisfy 1 <= min_frames <= max_frames");
  if (!(params.class_separation >= 0.0)) throw ConfigError("class_separation must be >= 0");

  const auto m = static_cast<std::uint64_t>(modality);
  Rng dir_rng(mix_seed(seed, 0x5eed0000 + m));
  Eigen::VectorXd u(d);
  for (int j = 0; j < d; ++j) u[j] = dir_rng.normal();
  u /= u.norm();
  const double offset = (label == corpus::Group::kAsd ? 0.5 : -0.5) * params.class_separation;
  const Eigen::VectorXd mu = offset * u;

  Rng rng(mix_seed(mix_seed(seed, fnv1a64(sample_id)), m));
  const int span = params.max_frames - params.min_frames + 1;
  const int t = params.min_frames + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
  EmbeddingSequence seq;
  seq.modality = modality;
  seq.values.resize(t, d);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < d; ++j) seq.values(i, j) = static_cast<float>(mu[j] + rng.normal());
  seq.source = "stub:v1";
  return seq;
}

}  // namespace cosfuse::adapters
