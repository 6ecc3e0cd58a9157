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

// Test extractor: writes a fixed 2x3 FVEC tensor to the path in argv[1].
// Bytes are assembled by hand so the file is an independent format oracle.
// With a second argument "fail" it exits non-zero; "sleep" waits forever.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <thread>

namespace {

void put_u32(std::FILE* f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  std::fwrite(b, 1, 4, f);
}

void put_f32(std::FILE* f, float x) {
  std::uint32_t v;
  std::memcpy(&v, &x, 4);
  put_u32(f, v);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return 2;
  if (argc > 2 && std::strcmp(argv[2], "fail") == 0) return 7;
  if (argc > 2 && std::strcmp(argv[2], "sleep") == 0)
    for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
  std::FILE* f = std::fopen(argv[1], "wb");
  if (!f) return 3;
  std::fwrite("FVEC", 1, 4, f);
  put_u32(f, 1);  // version
  put_u32(f, 2);  // ndim
  put_u32(f, 2);
  put_u32(f, 3);
  const float values[6] = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f};
  for (float v : values) put_f32(f, v);
  std::fclose(f);
  return 0;
}
