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

#ifndef COSFUSE_COSFUSE_H
#define COSFUSE_COSFUSE_H

/* Multimodal speech classification toolkit: corpus tools, feature
 * extraction, fusion models and cross-validated experiments.
 *
 * Conventions:
 *  - Every fallible call returns a cosfuse_status. On failure the message is
 *    available from cosfuse_last_error() on the same thread.
 *  - Handles are opaque and released with their matching *_free function.
 *  - Strings returned through char** are heap copies; release them with
 *    cosfuse_string_free.
 *  - Class labels: 0 = control, 1 = asd. Modalities: "A", "L", "P". */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define COSFUSE_API __declspec(dllexport)
#elif defined(COSFUSE_BUILDING_LIBRARY)
#define COSFUSE_API __attribute__((visibility("default")))
#else
#define COSFUSE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cosfuse_status {
  COSFUSE_OK = 0,
  COSFUSE_E_VALIDATION = 1,
  COSFUSE_E_PARTIAL = 2,
  COSFUSE_E_IO = 3,
  COSFUSE_E_FORMAT = 4,
  COSFUSE_E_CONFIG = 5,
  COSFUSE_E_EXTRACTION = 6,
  COSFUSE_E_NUMERIC = 7,
  COSFUSE_E_ARGUMENT = 8,
  COSFUSE_E_INTERNAL = 99
} cosfuse_status;

typedef struct cosfuse_manifest cosfuse_manifest;
typedef struct cosfuse_config cosfuse_config;
typedef struct cosfuse_report cosfuse_report;
typedef struct cosfuse_grid cosfuse_grid;
typedef struct cosfuse_bundle cosfuse_bundle;
typedef struct cosfuse_tensor cosfuse_tensor;

/* Receives one progress line; user_data is passed through unchanged. */
typedef void (*cosfuse_progress_fn)(const char* message, void* user_data);

COSFUSE_API const char* cosfuse_version(void);
COSFUSE_API const char* cosfuse_last_error(void);
COSFUSE_API void cosfuse_string_free(char* s);

/* ---- metrics ---- */
/* counts is row-major [actual][predicted] over {control, asd}. */
COSFUSE_API cosfuse_status cosfuse_metrics(const long counts[4], double* accuracy, double* macro_f1);

/* ---- corpus ---- */
COSFUSE_API cosfuse_status cosfuse_manifest_load(const char* path, cosfuse_manifest** out);
COSFUSE_API void cosfuse_manifest_free(cosfuse_manifest* m);
COSFUSE_API size_t cosfuse_manifest_size(const cosfuse_manifest* m);
COSFUSE_API cosfuse_status cosfuse_manifest_sample(const cosfuse_manifest* m, size_t index, const char** sample_id,
                                                   int* label);
/* Per-group counts, durations and ages as aligned text. */
COSFUSE_API cosfuse_status cosfuse_manifest_statistics(const cosfuse_manifest* m, char** text);

/* Synthetic corpus under out_dir (manifest.csv, transcripts, optional WAV). */
COSFUSE_API cosfuse_status cosfuse_synth(int n_asd, int n_control, double class_separation, int include_audio,
                                         double audio_seconds, uint64_t seed, const char* out_dir);

/* Stratified (or subject-disjoint) folds; folds_out has cosfuse_manifest_size entries. */
COSFUSE_API cosfuse_status cosfuse_folds(const cosfuse_manifest* m, int k, uint64_t seed, int subject_disjoint,
                                         int* folds_out);
COSFUSE_API cosfuse_status cosfuse_folds_csv(const cosfuse_manifest* m, int k, uint64_t seed, int subject_disjoint,
                                             char** csv);

/* ---- features ---- */
/* Writes <out_dir>/<sample_id>.fvec for every sample. provider_json is a
 * provider object as in experiment configs, e.g. {"kind":"dsp","features":"mfcc"}. */
COSFUSE_API cosfuse_status cosfuse_extract(const cosfuse_manifest* m, const char* modality, const char* provider_json,
                                           uint64_t seed, const char* out_dir, const char* work_dir);

/* Group statistics of the prosodic profile (mean and stddev by group and
 * gender) for the entire set and for the training part of fold 0. Writes
 * group_stats.csv and group_stats.txt under out_dir. */
COSFUSE_API cosfuse_status cosfuse_group_stats(const cosfuse_manifest* m, int k, uint64_t seed, const char* out_dir);

COSFUSE_API cosfuse_status cosfuse_fvec_write(const char* path, const size_t* dims, size_t ndim, const float* values);
COSFUSE_API cosfuse_status cosfuse_fvec_read(const char* path, cosfuse_tensor** out);
COSFUSE_API void cosfuse_tensor_free(cosfuse_tensor* t);
COSFUSE_API size_t cosfuse_tensor_ndim(const cosfuse_tensor* t);
COSFUSE_API size_t cosfuse_tensor_dim(const cosfuse_tensor* t, size_t axis);
COSFUSE_API const float* cosfuse_tensor_data(const cosfuse_tensor* t);

/* ---- experiments ---- */
COSFUSE_API cosfuse_status cosfuse_config_load(const char* path, cosfuse_config** out);
COSFUSE_API cosfuse_status cosfuse_config_parse(const char* json_text, const char* base_dir, cosfuse_config** out);
COSFUSE_API void cosfuse_config_free(cosfuse_config* c);
/* Overrides the experiment seed and the fold seed. */
COSFUSE_API cosfuse_status cosfuse_config_set_seed(cosfuse_config* c, uint64_t seed);
COSFUSE_API cosfuse_status cosfuse_config_set_jobs(cosfuse_config* c, int jobs);
/* Resolved config with defaults filled in. */
COSFUSE_API cosfuse_status cosfuse_config_json(const cosfuse_config* c, char** json_text);

COSFUSE_API cosfuse_status cosfuse_run(const cosfuse_config* c, cosfuse_progress_fn progress, void* user_data,
                                       cosfuse_report** out);
COSFUSE_API void cosfuse_report_free(cosfuse_report* r);
/* Canonical serialization without wall-clock fields. */
COSFUSE_API cosfuse_status cosfuse_report_json(const cosfuse_report* r, char** json_text);
COSFUSE_API cosfuse_status cosfuse_report_scores(const cosfuse_report* r, double* mean_accuracy,
                                                 double* mean_macro_f1);

COSFUSE_API cosfuse_status cosfuse_grid_load(const char* path, cosfuse_grid** out);
COSFUSE_API void cosfuse_grid_free(cosfuse_grid* g);
/* Builds a bundle from one config; lets `run` share report emission. */
COSFUSE_API cosfuse_status cosfuse_grid_from_config(const cosfuse_config* c, cosfuse_grid** out);
COSFUSE_API cosfuse_status cosfuse_grid_set_seed(cosfuse_grid* g, uint64_t seed);
COSFUSE_API size_t cosfuse_grid_size(const cosfuse_grid* g);
/* Runs every experiment. Failing runs become failure entries; returns
 * COSFUSE_E_PARTIAL when at least one failed, with *out still populated. */
COSFUSE_API cosfuse_status cosfuse_grid_run(const cosfuse_grid* g, int jobs, cosfuse_progress_fn progress,
                                            void* user_data, cosfuse_bundle** out);

COSFUSE_API cosfuse_status cosfuse_bundle_load(const char* dir, cosfuse_bundle** out);
COSFUSE_API void cosfuse_bundle_free(cosfuse_bundle* b);
COSFUSE_API size_t cosfuse_bundle_failed(const cosfuse_bundle* b);
/* Writes metadata.json, tables/, reports/ and confusion/ under out_dir. */
COSFUSE_API cosfuse_status cosfuse_bundle_emit(const cosfuse_bundle* b, const char* out_dir);
/* All tables rendered as aligned text. */
COSFUSE_API cosfuse_status cosfuse_bundle_tables_text(const cosfuse_bundle* b, char** text);

#ifdef __cplusplus
}
#endif

#endif /* COSFUSE_COSFUSE_H */
