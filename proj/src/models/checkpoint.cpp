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

#include <cstring>
#include <fstream>

#include "common/error.hpp"
#include "models/models.hpp"

namespace cosfuse::models {

namespace {

constexpr char kMagic[8] = {'C', 'F', 'S', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw FormatError("'" + path + "': truncated checkpoint");
  return v;
}

std::string get_string(std::istream& in, const std::string& path) {
  const std::uint32_t n = get_u32(in, path);
  if (n > (1u << 26)) throw FormatError("'" + path + "': implausible string length");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw FormatError("'" + path + "': truncated checkpoint");
  return s;
}

}  // namespace

// Layout: magic, u32 version, u32 spec length + spec JSON, u32 tensor count,
// then per tensor u32 name length + name + FVEC tensor.
void save_checkpoint(Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  const std::string spec = spec_to_json(model.spec());
  put_u32(out, static_cast<std::uint32_t>(spec.size()));
  out.write(spec.data(), static_cast<std::streamsize>(spec.size()));
  const auto& params = model.params();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    adapters::FvecTensor t;
    t.dims = {static_cast<std::uint32_t>(p->value.rows()), static_cast<std::uint32_t>(p->value.cols())};
    t.values.resize(static_cast<std::size_t>(p->value.size()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) t.values[i] = static_cast<float>(p->value.data()[i]);
    adapters::write_fvec(out, t);
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError("'" + path + "': not a checkpoint file");
  const std::uint32_t version = get_u32(in, path);
  if (version != kVersion) throw FormatError("'" + path + "': unsupported checkpoint version " + std::to_string(version));
  auto model = std::make_unique<Model>(spec_from_json(get_string(in, path)), 0);
  const std::uint32_t n = get_u32(in, path);
  const auto& params = model->params();
  if (n != params.size()) throw FormatError("'" + path + "': tensor count does not match the model spec");
  for (Param* p : params) {
    const std::string name = get_string(in, path);
    if (name != p->name) throw FormatError("'" + path + "': expected tensor '" + p->name + "', found '" + name + "'");
    const auto t = adapters::read_fvec(in, path);
    if (t.dims.size() != 2 || t.dims[0] != p->value.rows() || t.dims[1] != p->value.cols())
      throw FormatError("'" + path + "': tensor '" + name + "' has the wrong shape");
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = t.values[i];
    ++p->version;
  }
  return model;
}

}  // namespace cosfuse::models
