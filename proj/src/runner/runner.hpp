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

#include <optional>
#include <string>
#include <vector>

#include "evalharness/evalharness.hpp"

namespace cosfuse::runner {

// Parses a JSON experiment config. Relative paths resolve against base_dir
// and are stored absolute. Unknown keys and inconsistent settings throw
// ConfigError naming the key path.
eval::ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");
eval::ExperimentConfig parse_config(const std::string& path);
// One provider object, as found under "providers" in a config.
eval::ProviderConfig parse_provider_text(const std::string& text, const std::string& base_dir = ".");

// One grid run: a resolved config, or the reason it could not be resolved.
struct GridRun {
  std::string label;
  std::optional<eval::ExperimentConfig> config;
  std::string error;
  // Best-effort placement for runs that failed to parse.
  std::string table, model, topology;
};

// Grid file: {"base": {...}, "runs": [ {...overrides...} | "path/to/config.json", ... ]}.
// Each object run is merged onto base (JSON merge patch) before parsing.
std::vector<GridRun> parse_grid(const std::string& path);
std::vector<GridRun> parse_grid_text(const std::string& text, const std::string& base_dir = ".");

struct GridEntry {
  std::string name;
  std::string table, model, topology;
  std::optional<eval::ExperimentReport> report;
  std::string error;  // empty on success
  int error_code = 0;
};

struct Table {
  std::string name;    // file stem, e.g. "hierarchical"
  std::string layout;  // baseline | individual | concat | combined | hierarchical
  std::string row_header;
  std::vector<std::string> groups;  // column groups; empty for single-group layouts
  std::vector<std::string> metrics;  // e.g. Accuracy, F1
  std::vector<std::string> rows;
  std::vector<std::vector<std::string>> cells;  // rows x (max(1,groups) * metrics)
};

struct ReportBundle {
  std::vector<GridEntry> entries;
  std::vector<Table> tables;

  bool any_failed() const;
};

using ProgressFn = eval::ProgressFn;

// Runs every entry; a failing run becomes a failure marker, the rest continue.
ReportBundle run_grid(const std::vector<GridRun>& runs, int jobs = 1, const ProgressFn& progress = {});

// Percent with two decimals, half-up: 0.98746 -> "98.75".
std::string format_percent(double fraction);
inline constexpr const char* kFailedCell = "—";

std::vector<Table> build_tables(const std::vector<GridEntry>& entries);
std::string table_to_csv(const Table& t);
std::string table_to_text(const Table& t);

// Actual rows, predicted columns, class 0 = control, 1 = asd.
std::string confusion_text(const eval::ConfusionMatrix& cm, const std::string& title = "");
std::string confusion_svg(const eval::ConfusionMatrix& cm, const std::string& title = "");

// Writes metadata.json always; tables/, reports/ and confusion/ when non-empty.
void emit_reports(const ReportBundle& bundle, const std::string& out_dir);

// Rebuilds a bundle from <dir>/reports/*.json (or *.json directly in dir).
ReportBundle load_reports(const std::string& dir);

// Filesystem-safe experiment name.
std::string safe_name(const std::string& s);

}  // namespace cosfuse::runner
