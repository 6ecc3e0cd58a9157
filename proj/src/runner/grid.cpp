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

#include "common/error.hpp"
#include "runner/runner.hpp"

namespace cosfuse::runner {

bool ReportBundle::any_failed() const {
  for (const auto& e : entries)
    if (!e.report) return true;
  return false;
}

ReportBundle run_grid(const std::vector<GridRun>& runs, int jobs, const ProgressFn& progress) {
  ReportBundle bundle;
  for (const auto& run : runs) {
    GridEntry entry;
    entry.name = run.label;
    entry.table = run.table;
    entry.model = run.model;
    entry.topology = run.topology;
    if (!run.config) {
      entry.error = run.error;
      entry.error_code = static_cast<int>(ErrorCode::kConfig);
      if (progress) progress(run.label + ": skipped (" + run.error + ")");
      bundle.entries.push_back(std::move(entry));
      continue;
    }
    eval::ExperimentConfig cfg = *run.config;
    if (jobs > cfg.jobs) cfg.jobs = jobs;
    entry.name = cfg.name;
    entry.table = cfg.table;
    entry.model = cfg.model;
    entry.topology = cfg.topology.label();
    try {
      entry.report = eval::run_experiment(cfg, progress);
    } catch (const Error& e) {
      entry.error = e.what();
      entry.error_code = static_cast<int>(e.code());
    } catch (const std::exception& e) {
      entry.error = e.what();
      entry.error_code = static_cast<int>(ErrorCode::kInternal);
    }
    if (progress && !entry.report) progress(entry.name + ": failed (" + entry.error + ")");
    bundle.entries.push_back(std::move(entry));
  }
  bundle.tables = build_tables(bundle.entries);
  return bundle;
}

}  // namespace cosfuse::runner
