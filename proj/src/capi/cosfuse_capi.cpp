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

#include "cosfuse/cosfuse.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "adapters/adapters.hpp"
#include "common/error.hpp"
#include "corpus/corpus.hpp"
#include "dsp/dsp.hpp"
#include "evalharness/evalharness.hpp"
#include "runner/runner.hpp"

namespace fs = std::filesystem;
using namespace cosfuse;

struct cosfuse_manifest {
  corpus::Manifest m;
};
struct cosfuse_config {
  eval::ExperimentConfig c;
};
struct cosfuse_report {
  eval::ExperimentReport r;
};
struct cosfuse_grid {
  std::vector<runner::GridRun> runs;
};
struct cosfuse_bundle {
  runner::ReportBundle b;
};
struct cosfuse_tensor {
  adapters::FvecTensor t;
};

namespace {

thread_local std::string g_last_error;

cosfuse_status fail(cosfuse_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
cosfuse_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const Error& e) {
    return fail(static_cast<cosfuse_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(COSFUSE_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(COSFUSE_E_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void need(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::kArgument, std::string(what) + " must not be null");
}

adapters::Modality modality_of(const char* s) {
  need(s, "modality");
  const auto m = adapters::parse_modality(s);
  if (!m) throw Error(ErrorCode::kArgument, std::string("unknown modality '") + s + "' (expected A, L or P)");
  return *m;
}

std::string lexicon_dir() {
  if (const char* env = std::getenv("COSFUSE_DATA_DIR")) return (fs::path(env) / "lexicon").string();
  return (fs::path(COSFUSE_DATA_DIR) / "lexicon").string();
}

corpus::FoldAssignment folds_for(const corpus::Manifest& m, int k, uint64_t seed, int subject_disjoint) {
  return subject_disjoint ? corpus::make_subject_folds(m, k, seed) : corpus::make_folds(m, k, seed);
}

eval::ProgressFn progress_fn(cosfuse_progress_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& msg) { fn(msg.c_str(), user); };
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write '" + p.string() + "'");
}

}  // namespace

extern "C" {

const char* cosfuse_version(void) { return "0.1.0"; }
const char* cosfuse_last_error(void) { return g_last_error.c_str(); }
void cosfuse_string_free(char* s) { std::free(s); }

cosfuse_status cosfuse_metrics(const long counts[4], double* accuracy, double* macro_f1) {
  return guarded([&] {
    need(counts, "counts");
    eval::ConfusionMatrix cm;
    for (int i = 0; i < 4; ++i) {
      if (counts[i] < 0) throw Error(ErrorCode::kArgument, "counts must be non-negative");
      cm.counts[i / 2][i % 2] = counts[i];
    }
    if (accuracy) *accuracy = eval::accuracy(cm);
    if (macro_f1) *macro_f1 = eval::macro_f1(cm);
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_manifest_load(const char* path, cosfuse_manifest** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cosfuse_manifest{corpus::load_manifest(path)};
    return COSFUSE_OK;
  });
}

void cosfuse_manifest_free(cosfuse_manifest* m) { delete m; }

size_t cosfuse_manifest_size(const cosfuse_manifest* m) { return m ? m->m.samples.size() : 0; }

cosfuse_status cosfuse_manifest_sample(const cosfuse_manifest* m, size_t index, const char** sample_id, int* label) {
  return guarded([&] {
    need(m, "manifest");
    if (index >= m->m.samples.size()) throw Error(ErrorCode::kArgument, "sample index out of range");
    const auto& s = m->m.samples[index];
    if (sample_id) *sample_id = s.sample_id.c_str();
    if (label) *label = static_cast<int>(s.group);
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_manifest_statistics(const cosfuse_manifest* m, char** text) {
  return guarded([&] {
    need(m, "manifest");
    need(text, "text");
    *text = dup(corpus::corpus_statistics_table(corpus::corpus_statistics(m->m)));
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_synth(int n_asd, int n_control, double class_separation, int include_audio,
                             double audio_seconds, uint64_t seed, const char* out_dir) {
  return guarded([&] {
    need(out_dir, "out_dir");
    corpus::SyntheticSpec spec;
    spec.n_asd = n_asd;
    spec.n_control = n_control;
    spec.class_separation = class_separation;
    spec.include_audio = include_audio != 0;
    spec.audio_seconds = audio_seconds;
    corpus::generate_synthetic_corpus(spec, seed, out_dir, lexicon_dir());
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_folds(const cosfuse_manifest* m, int k, uint64_t seed, int subject_disjoint, int* folds_out) {
  return guarded([&] {
    need(m, "manifest");
    need(folds_out, "folds_out");
    const auto f = folds_for(m->m, k, seed, subject_disjoint);
    for (std::size_t i = 0; i < m->m.samples.size(); ++i) folds_out[i] = f.fold_of(m->m.samples[i].sample_id);
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_folds_csv(const cosfuse_manifest* m, int k, uint64_t seed, int subject_disjoint, char** csv) {
  return guarded([&] {
    need(m, "manifest");
    need(csv, "csv");
    *csv = dup(corpus::folds_to_csv(folds_for(m->m, k, seed, subject_disjoint), m->m));
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_extract(const cosfuse_manifest* m, const char* modality, const char* provider_json,
                               uint64_t seed, const char* out_dir, const char* work_dir) {
  return guarded([&] {
    need(m, "manifest");
    need(provider_json, "provider_json");
    need(out_dir, "out_dir");
    const auto mod = modality_of(modality);
    const auto provider = runner::parse_provider_text(provider_json, ".");
    const auto seqs = eval::provide_features(m->m, mod, provider, seed, work_dir ? work_dir : "");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError(std::string("cannot create '") + out_dir + "': " + ec.message());
    for (std::size_t i = 0; i < seqs.size(); ++i)
      adapters::save_embedding(seqs[i], (fs::path(out_dir) / (m->m.samples[i].sample_id + ".fvec")).string());
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_group_stats(const cosfuse_manifest* m, int k, uint64_t seed, const char* out_dir) {
  return guarded([&] {
    need(m, "manifest");
    need(out_dir, "out_dir");
    std::map<std::string, dsp::ProsodicProfile> profiles;
    for (const auto& s : m->m.samples) {
      if (s.audio_path.empty()) throw Error(ErrorCode::kValidation, "sample '" + s.sample_id + "' has no audio");
      profiles[s.sample_id] = dsp::prosodic_profile(dsp::load_audio(s.audio_path));
    }
    eval::Subset entire{"ENTIRE", {}};
    for (std::size_t i = 0; i < m->m.samples.size(); ++i) entire.indices.push_back(i);
    const auto folds = corpus::make_folds(m->m, k, seed);
    const eval::Subset train{"TRAIN", folds.train_indices(m->m, 0)};
    const auto table = eval::group_statistics(m->m, profiles, {entire, train});
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError(std::string("cannot create '") + out_dir + "': " + ec.message());
    write_text(fs::path(out_dir) / "group_stats.csv", table.to_csv());
    write_text(fs::path(out_dir) / "group_stats.txt", table.to_text());
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_fvec_write(const char* path, const size_t* dims, size_t ndim, const float* values) {
  return guarded([&] {
    need(path, "path");
    need(dims, "dims");
    adapters::FvecTensor t;
    std::size_t n = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
      if (dims[i] > 0xFFFFFFFFu) throw Error(ErrorCode::kArgument, "dimension too large");
      t.dims.push_back(static_cast<std::uint32_t>(dims[i]));
      n *= dims[i];
    }
    if (n) need(values, "values");
    t.values.assign(values, values + n);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(std::string("cannot write '") + path + "'");
    adapters::write_fvec(out, t);
    if (!out) throw IoError(std::string("write failed for '") + path + "'");
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_fvec_read(const char* path, cosfuse_tensor** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string("cannot open '") + path + "'");
    *out = new cosfuse_tensor{adapters::read_fvec(in, path)};
    return COSFUSE_OK;
  });
}

void cosfuse_tensor_free(cosfuse_tensor* t) { delete t; }
size_t cosfuse_tensor_ndim(const cosfuse_tensor* t) { return t ? t->t.dims.size() : 0; }
size_t cosfuse_tensor_dim(const cosfuse_tensor* t, size_t axis) {
  return t && axis < t->t.dims.size() ? t->t.dims[axis] : 0;
}
const float* cosfuse_tensor_data(const cosfuse_tensor* t) { return t ? t->t.values.data() : nullptr; }

cosfuse_status cosfuse_config_load(const char* path, cosfuse_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cosfuse_config{runner::parse_config(path)};
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_config_parse(const char* json_text, const char* base_dir, cosfuse_config** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = new cosfuse_config{runner::parse_config_text(json_text, base_dir ? base_dir : ".")};
    return COSFUSE_OK;
  });
}

void cosfuse_config_free(cosfuse_config* c) { delete c; }

cosfuse_status cosfuse_config_set_seed(cosfuse_config* c, uint64_t seed) {
  return guarded([&] {
    need(c, "config");
    c->c.seed = seed;
    c->c.folds.seed = seed;
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_config_set_jobs(cosfuse_config* c, int jobs) {
  return guarded([&] {
    need(c, "config");
    if (jobs < 1) throw Error(ErrorCode::kArgument, "jobs must be >= 1");
    c->c.jobs = jobs;
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_config_json(const cosfuse_config* c, char** json_text) {
  return guarded([&] {
    need(c, "config");
    need(json_text, "json_text");
    *json_text = dup(eval::config_to_json(c->c, true));
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_run(const cosfuse_config* c, cosfuse_progress_fn progress, void* user_data,
                           cosfuse_report** out) {
  return guarded([&] {
    need(c, "config");
    need(out, "out");
    *out = new cosfuse_report{eval::run_experiment(c->c, progress_fn(progress, user_data))};
    return COSFUSE_OK;
  });
}

void cosfuse_report_free(cosfuse_report* r) { delete r; }

cosfuse_status cosfuse_report_json(const cosfuse_report* r, char** json_text) {
  return guarded([&] {
    need(r, "report");
    need(json_text, "json_text");
    *json_text = dup(eval::report_to_json(r->r));
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_report_scores(const cosfuse_report* r, double* mean_accuracy, double* mean_macro_f1) {
  return guarded([&] {
    need(r, "report");
    if (mean_accuracy) *mean_accuracy = r->r.mean_accuracy;
    if (mean_macro_f1) *mean_macro_f1 = r->r.mean_macro_f1;
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_grid_load(const char* path, cosfuse_grid** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cosfuse_grid{runner::parse_grid(path)};
    return COSFUSE_OK;
  });
}

void cosfuse_grid_free(cosfuse_grid* g) { delete g; }

cosfuse_status cosfuse_grid_from_config(const cosfuse_config* c, cosfuse_grid** out) {
  return guarded([&] {
    need(c, "config");
    need(out, "out");
    runner::GridRun run;
    run.label = c->c.name;
    run.config = c->c;
    *out = new cosfuse_grid{{run}};
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_grid_set_seed(cosfuse_grid* g, uint64_t seed) {
  return guarded([&] {
    need(g, "grid");
    for (auto& r : g->runs)
      if (r.config) {
        r.config->seed = seed;
        r.config->folds.seed = seed;
      }
    return COSFUSE_OK;
  });
}

size_t cosfuse_grid_size(const cosfuse_grid* g) { return g ? g->runs.size() : 0; }

cosfuse_status cosfuse_grid_run(const cosfuse_grid* g, int jobs, cosfuse_progress_fn progress, void* user_data,
                                cosfuse_bundle** out) {
  return guarded([&] {
    need(g, "grid");
    need(out, "out");
    *out = new cosfuse_bundle{runner::run_grid(g->runs, jobs, progress_fn(progress, user_data))};
    if ((*out)->b.any_failed()) {
      std::string msg;
      for (const auto& e : (*out)->b.entries)
        if (!e.report) msg += (msg.empty() ? "" : "; ") + e.name + ": " + e.error;
      return fail(COSFUSE_E_PARTIAL, msg);
    }
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_bundle_load(const char* dir, cosfuse_bundle** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new cosfuse_bundle{runner::load_reports(dir)};
    return COSFUSE_OK;
  });
}

void cosfuse_bundle_free(cosfuse_bundle* b) { delete b; }

size_t cosfuse_bundle_failed(const cosfuse_bundle* b) {
  if (!b) return 0;
  size_t n = 0;
  for (const auto& e : b->b.entries) n += e.report ? 0 : 1;
  return n;
}

cosfuse_status cosfuse_bundle_emit(const cosfuse_bundle* b, const char* out_dir) {
  return guarded([&] {
    need(b, "bundle");
    need(out_dir, "out_dir");
    runner::emit_reports(b->b, out_dir);
    return COSFUSE_OK;
  });
}

cosfuse_status cosfuse_bundle_tables_text(const cosfuse_bundle* b, char** text) {
  return guarded([&] {
    need(b, "bundle");
    need(text, "text");
    std::string s;
    for (const auto& t : b->b.tables) s += t.name + "\n" + runner::table_to_text(t) + "\n";
    *text = dup(s);
    return COSFUSE_OK;
  });
}

}  // extern "C"
