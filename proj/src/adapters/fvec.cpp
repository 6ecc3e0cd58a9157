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

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "adapters/adapters.hpp"
#include "common/error.hpp"

namespace cosfuse::adapters {

static_assert(std::endian::native == std::endian::little, "FVEC I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'F', 'V', 'E', 'C'};
constexpr std::uint32_t kMaxDims = 8;

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in, const std::string& name, const char* what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4))
    throw FormatError("'" + name + "': truncated header (" + what + ")");
  return v;
}

}  // namespace

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::kA:
      return "A";
    case Modality::kL:
      return "L";
    default:
      return "P";
  }
}

std::optional<Modality> parse_modality(std::string_view s) {
  if (s == "A") return Modality::kA;
  if (s == "L") return Modality::kL;
  if (s == "P") return Modality::kP;
  return std::nullopt;
}

void write_fvec(std::ostream& out, const FvecTensor& t) {
  std::uint64_t n = 1;
  for (auto d : t.dims) n *= d;
  if (t.dims.empty() || n != t.values.size())
    throw Error(ErrorCode::kArgument, "FVEC dims do not match payload size");
  out.write(kMagic, 4);
  put_u32(out, kFvecVersion);
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  out.write(reinterpret_cast<const char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * sizeof(float)));
}

FvecTensor read_fvec(std::istream& in, const std::string& name) {
  char magic[4];
  if (!in.read(magic, 4)) throw FormatError("'" + name + "': truncated header (magic)");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("'" + name + "': bad magic, not an FVEC file");
  const std::uint32_t version = get_u32(in, name, "version");
  if (version != kFvecVersion)
    throw FormatError("'" + name + "': unsupported FVEC version " + std::to_string(version));
  const std::uint32_t ndim = get_u32(in, name, "ndim");
  if (ndim == 0 || ndim > kMaxDims) throw FormatError("'" + name + "': invalid ndim " + std::to_string(ndim));
  FvecTensor t;
  std::uint64_t n = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    const std::uint32_t d = get_u32(in, name, "dims");
    if (d == 0) throw FormatError("'" + name + "': zero-length dimension");
    t.dims.push_back(d);
    n *= d;
    if (n > (std::uint64_t{1} << 34)) throw FormatError("'" + name + "': payload too large");
  }
  t.values.resize(n);
  if (!in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(n * sizeof(float))))
    throw FormatError("'" + name + "': truncated payload (expected " + std::to_string(n) + " floats)");
  return t;
}

std::vector<std::uint8_t> encode_fvec(const FvecTensor& t) {
  std::ostringstream out(std::ios::binary);
  write_fvec(out, t);
  const std::string s = out.str();
  return {s.begin(), s.end()};
}

FvecTensor decode_fvec(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  std::istringstream in(std::string(bytes.begin(), bytes.end()), std::ios::binary);
  FvecTensor t = read_fvec(in, name);
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("'" + name + "': trailing bytes after payload");
  return t;
}

void save_embedding(const EmbeddingSequence& seq, const std::string& path) {
  if (seq.values.size() == 0) throw Error(ErrorCode::kArgument, "cannot save an empty embedding");
  if (!seq.values.allFinite()) throw NumericError("embedding for '" + path + "' has non-finite values");
  FvecTensor t;
  t.dims = {static_cast<std::uint32_t>(seq.values.rows()), static_cast<std::uint32_t>(seq.values.cols())};
  t.values.assign(seq.values.data(), seq.values.data() + seq.values.size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_fvec(out, t);
  if (!out) throw IoError("write failed for '" + path + "'");
}

EmbeddingSequence load_embedding(const std::string& path, Modality modality) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  FvecTensor t = read_fvec(in, path);
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("'" + path + "': trailing bytes after payload");
  if (t.dims.size() > 2) throw FormatError("'" + path + "': expected a 1-D or 2-D tensor");
  const Eigen::Index rows = t.dims.size() == 2 ? t.dims[0] : 1;
  const Eigen::Index cols = t.dims.back();
  EmbeddingSequence seq;
  seq.modality = modality;
  seq.values = Eigen::Map<const MatrixF>(t.values.data(), rows, cols);
  if (!seq.values.allFinite()) throw FormatError("'" + path + "': non-finite values");
  seq.source = "fvec:" + path;
  return seq;
}

Vector pool_mean(const EmbeddingSequence& seq) {
  if (seq.values.rows() < 1) throw Error(ErrorCode::kArgument, "pool_mean needs at least one frame");
  return seq.values.cast<double>().colwise().mean().transpose();
}

}  // namespace cosfuse::adapters
