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

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include "adapters/adapters.hpp"
#include "common/error.hpp"

namespace cosfuse::adapters {

namespace fs = std::filesystem;

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

std::string expand_template(std::string_view tmpl, const corpus::SampleRecord& sample,
                            Modality modality, const std::string& out_path) {
  const std::pair<std::string_view, std::string> subs[] = {
      {"{audio}", shell_quote(sample.audio_path)},
      {"{transcript}", shell_quote(sample.transcript_path)},
      {"{out}", shell_quote(out_path)},
      {"{modality}", std::string(to_string(modality))},
  };
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    bool matched = false;
    for (const auto& [key, value] : subs) {
      if (tmpl.substr(i, key.size()) == key) {
        out += value;
        i += key.size();
        matched = true;
        break;
      }
    }
    if (!matched) out += tmpl[i++];
  }
  return out;
}

ExternalExtractor::ExternalExtractor(std::string command_template, std::string work_dir, double timeout_s)
    : template_(std::move(command_template)), work_dir_(std::move(work_dir)), timeout_s_(timeout_s) {
  if (template_.find("{out}") == std::string::npos)
    throw ConfigError("external command template must contain {out}");
  if (!(timeout_s_ > 0.0)) throw ConfigError("external extractor timeout must be > 0");
}

std::size_t ExternalExtractor::invocations() const {
  std::lock_guard lock(mu_);
  return invocations_;
}

EmbeddingSequence ExternalExtractor::extract(const corpus::SampleRecord& sample, Modality modality) {
  const auto key = std::make_tuple(sample.sample_id, static_cast<int>(modality));
  std::promise<EmbeddingSequence> promise;
  std::shared_future<EmbeddingSequence> future;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      future = promise.get_future().share();
      cache_.emplace(key, future);
      ++invocations_;
      owner = true;
    } else {
      future = it->second;
    }
  }
  if (owner) {
    try {
      promise.set_value(run(sample, modality));
    } catch (...) {
      // Failures are not cached; a later call retries.
      {
        std::lock_guard lock(mu_);
        cache_.erase(key);
      }
      promise.set_exception(std::current_exception());
    }
  }
  return future.get();
}

EmbeddingSequence ExternalExtractor::run(const corpus::SampleRecord& sample, Modality modality) {
  std::error_code ec;
  fs::create_directories(work_dir_, ec);
  if (ec) throw ExtractionError(sample.sample_id, "cannot create work dir '" + work_dir_ + "'");
  const std::string out_path =
      (fs::path(work_dir_) / (sample.sample_id + "." + std::string(to_string(modality)) + ".fvec")).string();
  fs::remove(out_path, ec);
  const std::string cmd = expand_template(template_, sample, modality, out_path);

  const pid_t pid = fork();
  if (pid < 0) throw ExtractionError(sample.sample_id, "fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s_);
  int status = 0;
  auto delay = std::chrono::milliseconds(1);
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw ExtractionError(sample.sample_id, "waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw ExtractionError(sample.sample_id, "extractor timed out after " + std::to_string(timeout_s_) + " s");
    }
    std::this_thread::sleep_for(delay);
    delay = std::min(delay * 2, std::chrono::milliseconds(50));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const std::string how = WIFEXITED(status) ? "exited with status " + std::to_string(WEXITSTATUS(status))
                                              : "terminated by a signal";
    throw ExtractionError(sample.sample_id, "extractor " + how);
  }
  try {
    EmbeddingSequence seq = load_embedding(out_path, modality);
    seq.source = "external:" + template_;
    return seq;
  } catch (const Error& e) {
    throw ExtractionError(sample.sample_id, std::string("malformed output: ") + e.what());
  }
}

}  // namespace cosfuse::adapters
