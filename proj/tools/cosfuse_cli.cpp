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

// Command-line front end over the cosfuse C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cosfuse/cosfuse.h"

namespace {

// Process exit codes.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitPartial = 2;
constexpr int kExitIo = 3;

int exit_code(cosfuse_status s) {
  switch (s) {
    case COSFUSE_OK:
      return kExitOk;
    case COSFUSE_E_PARTIAL:
      return kExitPartial;
    case COSFUSE_E_IO:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

int report(cosfuse_status s, const char* what) {
  if (s != COSFUSE_OK) std::fprintf(stderr, "cosfuse %s: %s\n", what, cosfuse_last_error());
  return exit_code(s);
}

void print_progress(const char* msg, void*) { std::fprintf(stderr, "%s\n", msg); }

std::string take(char* s) {
  std::string out = s ? s : "";
  cosfuse_string_free(s);
  return out;
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

struct Globals {
  std::optional<uint64_t> seed;
  std::string out;
  int jobs = 1;
  std::string config;
  bool quiet = false;
};

// Emits the bundle, prints its tables and maps the run status to an exit code.
int finish_bundle(cosfuse_status run_status, cosfuse_bundle* bundle, const std::string& out, const char* what) {
  if (!bundle) return report(run_status, what);
  if (run_status == COSFUSE_E_PARTIAL) std::fprintf(stderr, "cosfuse %s: some runs failed: %s\n", what, cosfuse_last_error());
  const cosfuse_status e = cosfuse_bundle_emit(bundle, out.c_str());
  if (e != COSFUSE_OK) {
    cosfuse_bundle_free(bundle);
    return report(e, what);
  }
  char* text = nullptr;
  if (cosfuse_bundle_tables_text(bundle, &text) == COSFUSE_OK) std::cout << take(text);
  std::cout << "reports written to " << out << "\n";
  cosfuse_bundle_free(bundle);
  return exit_code(run_status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cosfuse: multimodal speech classification experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed (overrides config seeds)");
  app.add_option("--out", g.out, "Output directory (or file for 'folds')");
  app.add_option("--jobs", g.jobs, "Parallel folds")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Experiment config (run) or grid file (grid)");
  app.add_flag("--quiet", g.quiet, "Suppress progress messages");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  int n_asd = 151, n_control = 62;
  double separation = 1.0, audio_seconds = 1.5;
  bool audio = false;
  synth->add_option("--n-asd", n_asd, "Number of asd samples");
  synth->add_option("--n-control", n_control, "Number of control samples");
  synth->add_option("--separation", separation, "Class separation (0 = indistinguishable)");
  synth->add_flag("--audio", audio, "Also synthesize WAV audio");
  synth->add_option("--audio-seconds", audio_seconds, "Audio length per sample");

  // extract
  auto* extract = app.add_subcommand("extract", "Extract per-sample features to FVEC files");
  std::string manifest, modality = "A", provider = "dsp", features = "mfcc", command, provider_json, work_dir;
  int dim = 0;
  double stub_sep = 0.0, timeout_s = 600.0;
  extract->add_option("--manifest", manifest, "Manifest CSV")->required();
  extract->add_option("--modality", modality, "A, L or P");
  extract->add_option("--provider", provider, "dsp | handcrafted | stub | external");
  extract->add_option("--features", features, "dsp features: mfcc or prosodic");
  extract->add_option("--dim", dim, "stub dimension (0: modality default)");
  extract->add_option("--separation", stub_sep, "stub class separation");
  extract->add_option("--command", command, "external command template");
  extract->add_option("--timeout", timeout_s, "external timeout in seconds");
  extract->add_option("--provider-json", provider_json, "Provider object as JSON (overrides the flags above)");
  extract->add_option("--work-dir", work_dir, "Scratch directory for external extractors");

  // folds
  auto* folds = app.add_subcommand("folds", "Assign stratified cross-validation folds");
  int k = 5;
  bool subject_disjoint = false;
  folds->add_option("--manifest", manifest, "Manifest CSV")->required();
  folds->add_option("-k", k, "Number of folds");
  folds->add_flag("--subject-disjoint", subject_disjoint, "Keep each subject within one fold");

  // run / grid / stats / report
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", g.config, "Experiment config");
  auto* grid = app.add_subcommand("grid", "Run a grid of experiment configs");
  grid->add_option("grid", g.config, "Grid file");
  auto* stats = app.add_subcommand("stats", "Prosodic group statistics by group and gender");
  stats->add_option("--manifest", manifest, "Manifest CSV with audio")->required();
  stats->add_option("-k", k, "Folds used to define the training subset");
  auto* rep = app.add_subcommand("report", "Re-emit tables from stored reports");
  std::string in_dir;
  rep->add_option("dir", in_dir, "Directory holding metadata.json or reports/")->required();

  for (auto* sub : {synth, extract, folds, run, grid, stats, rep}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }
  const uint64_t seed = g.seed.value_or(0);
  cosfuse_progress_fn progress = g.quiet ? nullptr : print_progress;

  if (*synth) {
    const std::string out = g.out.empty() ? "synthetic" : g.out;
    const auto s = cosfuse_synth(n_asd, n_control, separation, audio ? 1 : 0, audio_seconds, seed, out.c_str());
    if (s == COSFUSE_OK) std::cout << "wrote " << out << "/manifest.csv\n";
    return report(s, "synth");
  }

  if (*extract || *folds || *stats) {
    cosfuse_manifest* m = nullptr;
    cosfuse_status s = cosfuse_manifest_load(manifest.c_str(), &m);
    if (s != COSFUSE_OK) return report(s, "manifest");
    if (*extract) {
      if (provider_json.empty()) {
        std::ostringstream j;
        j << "{\"kind\":\"" << json_escape(provider) << "\"";
        if (provider == "dsp") j << ",\"features\":\"" << json_escape(features) << "\"";
        if (provider == "stub") {
          if (dim > 0) j << ",\"dim\":" << dim;
          j << ",\"class_separation\":" << stub_sep;
        }
        if (provider == "external")
          j << ",\"command\":\"" << json_escape(command) << "\",\"timeout_s\":" << timeout_s;
        j << "}";
        provider_json = j.str();
      }
      const std::string out = g.out.empty() ? "features_" + modality : g.out;
      s = cosfuse_extract(m, modality.c_str(), provider_json.c_str(), seed, out.c_str(),
                          work_dir.empty() ? nullptr : work_dir.c_str());
      if (s == COSFUSE_OK) std::cout << "wrote " << cosfuse_manifest_size(m) << " FVEC files to " << out << "\n";
    } else if (*folds) {
      char* csv = nullptr;
      s = cosfuse_folds_csv(m, k, seed, subject_disjoint ? 1 : 0, &csv);
      if (s == COSFUSE_OK) {
        const std::string text = take(csv);
        if (g.out.empty()) {
          std::cout << text;
        } else {
          std::ofstream f(g.out, std::ios::binary);
          if (!(f << text)) {
            std::fprintf(stderr, "cosfuse folds: cannot write '%s'\n", g.out.c_str());
            cosfuse_manifest_free(m);
            return kExitIo;
          }
        }
      }
    } else {
      const std::string out = g.out.empty() ? "stats" : g.out;
      s = cosfuse_group_stats(m, k, seed, out.c_str());
      if (s == COSFUSE_OK) {
        std::ifstream f(out + "/group_stats.txt");
        std::cout << f.rdbuf();
      }
    }
    cosfuse_manifest_free(m);
    return report(s, "command");
  }

  if (*run || *grid) {
    if (g.config.empty()) {
      std::fprintf(stderr, "cosfuse: a config file is required (--config or positional)\n");
      return kExitValidation;
    }
    cosfuse_grid* gr = nullptr;
    std::string out_dir = g.out;
    if (*run) {
      cosfuse_config* c = nullptr;
      cosfuse_status s = cosfuse_config_load(g.config.c_str(), &c);
      if (s != COSFUSE_OK) return report(s, "config");
      // The config's own "out" applies when --out is absent.
      char* echo = nullptr;
      if (out_dir.empty() && cosfuse_config_json(c, &echo) == COSFUSE_OK)
        out_dir = nlohmann::json::parse(echo).value("out", std::string());
      cosfuse_string_free(echo);
      s = cosfuse_grid_from_config(c, &gr);
      cosfuse_config_free(c);
      if (s != COSFUSE_OK) return report(s, "run");
    } else {
      const cosfuse_status s = cosfuse_grid_load(g.config.c_str(), &gr);
      if (s != COSFUSE_OK) return report(s, "grid");
    }
    if (g.seed) cosfuse_grid_set_seed(gr, *g.seed);
    cosfuse_bundle* b = nullptr;
    const cosfuse_status s = cosfuse_grid_run(gr, g.jobs, progress, nullptr, &b);
    cosfuse_grid_free(gr);
    return finish_bundle(s, b, out_dir.empty() ? "results" : out_dir, *run ? "run" : "grid");
  }

  if (*rep) {
    cosfuse_bundle* b = nullptr;
    const cosfuse_status s = cosfuse_bundle_load(in_dir.c_str(), &b);
    if (s != COSFUSE_OK) return report(s, "report");
    return finish_bundle(b && cosfuse_bundle_failed(b) ? COSFUSE_E_PARTIAL : COSFUSE_OK, b,
                         g.out.empty() ? in_dir : g.out, "report");
  }
  return kExitValidation;
}
