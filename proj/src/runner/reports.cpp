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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "runner/runner.hpp"

namespace cosfuse::runner {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using adapters::Modality;
using models::FusionTopology;

std::string format_percent(double fraction) {
  if (!std::isfinite(fraction)) return kFailedCell;
  const double scaled = std::floor(std::abs(fraction) * 10000.0 + 0.5 + 1e-9);
  const auto n = static_cast<long long>(scaled);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%lld.%02lld", fraction < 0 && n > 0 ? "-" : "", n / 100, n % 100);
  return buf;
}

namespace {

const std::vector<std::pair<std::string, std::string>>& model_rows() {
  static const std::vector<std::pair<std::string, std::string>> rows = {
      {"svm_rbf", "SVM"}, {"random_forest", "RF"}, {"knn", "KNN"}, {"gaussian_nb", "NB"},
      {"decision_tree", "DT"}, {"rnn", "RNN"},     {"cnn", "CNN"}, {"transformer", "TRANSFORMER"}};
  return rows;
}

std::string model_label(const std::string& model) {
  for (const auto& [key, label] : model_rows())
    if (key == model) return label;
  return model;
}

int model_rank(const std::string& model) {
  const auto& rows = model_rows();
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].first == model) return static_cast<int>(i);
  return static_cast<int>(rows.size());
}

std::optional<FusionTopology> try_topology(const std::string& s) {
  try {
    return FusionTopology::parse(s);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::set<Modality> modality_set(const std::vector<Modality>& ms) { return {ms.begin(), ms.end()}; }

// Column group a topology belongs to, by modality set; -1 if none.
int group_index(const std::vector<std::vector<Modality>>& groups, const FusionTopology& t) {
  if (t.kind == FusionTopology::Kind::kHierarchical) return -1;
  for (std::size_t i = 0; i < groups.size(); ++i)
    if (modality_set(groups[i]) == modality_set(t.modalities)) return static_cast<int>(i);
  return -1;
}

struct LayoutDef {
  std::vector<std::string> group_labels;
  std::vector<std::vector<Modality>> groups;
};

std::optional<LayoutDef> grouped_layout(const std::string& layout) {
  const Modality A = Modality::kA, L = Modality::kL, P = Modality::kP;
  if (layout == "individual") return LayoutDef{{"LINGUISTIC", "ACOUSTIC", "PARALINGUISTIC"}, {{L}, {A}, {P}}};
  if (layout == "concat") return LayoutDef{{"L+A", "A+P", "L+P", "A+L+P"}, {{L, A}, {A, P}, {L, P}, {A, L, P}}};
  if (layout == "combined") return LayoutDef{{"L", "L+A", "L+P", "A+L+P"}, {{L}, {L, A}, {L, P}, {A, L, P}}};
  return std::nullopt;
}

const std::vector<FusionTopology>& hierarchical_rows() {
  static const std::vector<FusionTopology> rows = {
      FusionTopology::hierarchical(Modality::kP, Modality::kA, Modality::kL),
      FusionTopology::hierarchical(Modality::kA, Modality::kL, Modality::kP),
      FusionTopology::hierarchical(Modality::kL, Modality::kP, Modality::kA)};
  return rows;
}

bool same_order(const FusionTopology& a, const FusionTopology& b) {
  return a.kind == FusionTopology::Kind::kHierarchical && b.kind == FusionTopology::Kind::kHierarchical &&
         a.modalities.size() == 3 && b.modalities.size() == 3 && a.modalities[2] == b.modalities[2] &&
         modality_set({a.modalities[0], a.modalities[1]}) == modality_set({b.modalities[0], b.modalities[1]});
}

std::pair<std::string, std::string> cell_pair(const GridEntry& e) {
  if (!e.report) return {kFailedCell, kFailedCell};
  return {format_percent(e.report->mean_accuracy), format_percent(e.report->mean_macro_f1)};
}

Table build_one(const std::string& table_key, const std::vector<const GridEntry*>& entries) {
  Table t;
  const auto slash = table_key.find('/');
  t.layout = table_key.substr(0, slash);
  t.name = safe_name(slash == std::string::npos ? table_key : table_key.substr(0, slash) + "_" + table_key.substr(slash + 1));
  std::vector<const GridEntry*> unplaced;

  if (t.layout == "hierarchical") {
    t.row_header = "Fusion order";
    t.metrics = {"Accuracy", "Macro F1"};
    std::set<std::string> models;
    for (const auto* e : entries) models.insert(e->model);
    const bool multi = models.size() > 1;
    std::vector<std::string> model_order(models.begin(), models.end());
    std::sort(model_order.begin(), model_order.end(),
              [](const std::string& a, const std::string& b) { return model_rank(a) < model_rank(b) || (model_rank(a) == model_rank(b) && a < b); });
    std::set<const GridEntry*> placed;
    for (const auto& model : model_order) {
      for (const auto& order : hierarchical_rows()) {
        const GridEntry* hit = nullptr;
        for (const auto* e : entries) {
          const auto topo = try_topology(e->topology);
          if (e->model == model && topo && same_order(*topo, order) && !placed.count(e)) {
            hit = e;
            break;
          }
        }
        t.rows.push_back(multi ? model_label(model) + " " + order.label() : order.label());
        if (hit) {
          placed.insert(hit);
          const auto [a, f] = cell_pair(*hit);
          t.cells.push_back({a, f});
        } else {
          t.cells.push_back({kFailedCell, kFailedCell});
        }
      }
    }
    for (const auto* e : entries)
      if (!placed.count(e)) unplaced.push_back(e);
  } else if (const auto def = grouped_layout(t.layout)) {
    t.row_header = "Model";
    t.groups = def->group_labels;
    t.metrics = {"Accuracy", "F1"};
    std::map<std::string, std::vector<std::string>> rows;
    std::vector<std::string> order;
    for (const auto* e : entries) {
      const auto topo = try_topology(e->topology);
      const int g = topo ? group_index(def->groups, *topo) : -1;
      if (g < 0) {
        unplaced.push_back(e);
        continue;
      }
      auto& row = rows[e->model];
      if (row.empty()) {
        row.assign(def->groups.size() * 2, "");
        order.push_back(e->model);
      }
      const auto [a, f] = cell_pair(*e);
      row[static_cast<std::size_t>(g) * 2] = a;
      row[static_cast<std::size_t>(g) * 2 + 1] = f;
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const std::string& a, const std::string& b) { return model_rank(a) < model_rank(b); });
    for (const auto& m : order) {
      t.rows.push_back(model_label(m));
      t.cells.push_back(rows[m]);
    }
  } else {
    // baseline and free-form tables: one row per entry, models in canonical order.
    t.row_header = t.layout == "baseline" ? "Model" : "Experiment";
    t.metrics = {"Accuracy", "F1"};
    std::vector<const GridEntry*> sorted = entries;
    if (t.layout == "baseline")
      std::stable_sort(sorted.begin(), sorted.end(),
                       [](const GridEntry* a, const GridEntry* b) { return model_rank(a->model) < model_rank(b->model); });
    for (const auto* e : sorted) {
      t.rows.push_back(t.layout == "baseline" ? model_label(e->model) : e->name);
      const auto [a, f] = cell_pair(*e);
      t.cells.push_back({a, f});
    }
  }
  // Entries that do not fit the layout still get a traceable row.
  const std::size_t width = std::max<std::size_t>(1, t.groups.size()) * t.metrics.size();
  for (const auto* e : unplaced) {
    t.rows.push_back(e->name);
    std::vector<std::string> row(width, "");
    if (!e->report) std::fill(row.begin(), row.end(), kFailedCell);
    t.cells.push_back(row);
  }
  return t;
}

std::vector<std::string> header_cells(const Table& t) {
  std::vector<std::string> h = {t.row_header};
  if (t.groups.empty()) {
    h.insert(h.end(), t.metrics.begin(), t.metrics.end());
  } else {
    for (const auto& g : t.groups)
      for (const auto& m : t.metrics) h.push_back(g + " " + m);
  }
  return h;
}

// Display width in code points, so the failure marker aligns.
std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::string pad(const std::string& s, std::size_t width, bool left) {
  const std::size_t w = display_width(s);
  const std::string fill(width > w ? width - w : 0, ' ');
  return left ? s + fill : fill + s;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Unique file stems in entry order.
std::vector<std::string> entry_stems(const std::vector<GridEntry>& entries) {
  std::vector<std::string> stems;
  std::set<std::string> used;
  for (const auto& e : entries) {
    std::string base = safe_name(e.name), stem = base;
    for (int i = 2; used.count(stem); ++i) stem = base + "_" + std::to_string(i);
    used.insert(stem);
    stems.push_back(stem);
  }
  return stems;
}

}  // namespace

std::vector<Table> build_tables(const std::vector<GridEntry>& entries) {
  std::vector<std::string> keys;
  std::map<std::string, std::vector<const GridEntry*>> by_table;
  for (const auto& e : entries) {
    const std::string key = e.table.empty() ? "results" : e.table;
    if (!by_table.count(key)) keys.push_back(key);
    by_table[key].push_back(&e);
  }
  std::vector<Table> tables;
  for (const auto& k : keys) tables.push_back(build_one(k, by_table[k]));
  return tables;
}

std::string table_to_csv(const Table& t) {
  std::string out = csv::join_row(header_cells(t)) + "\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<std::string> row = {t.rows[r]};
    row.insert(row.end(), t.cells[r].begin(), t.cells[r].end());
    out += csv::join_row(row) + "\n";
  }
  return out;
}

std::string table_to_text(const Table& t) {
  const std::size_t per_group = t.metrics.size();
  const std::size_t ncols = std::max<std::size_t>(1, t.groups.size()) * per_group;
  std::size_t first = display_width(t.row_header);
  for (const auto& r : t.rows) first = std::max(first, display_width(r));
  std::vector<std::size_t> w(ncols, 0);
  for (std::size_t c = 0; c < ncols; ++c) {
    w[c] = display_width(t.metrics[c % per_group]);
    for (const auto& row : t.cells) w[c] = std::max(w[c], display_width(row[c]));
  }
  // Widen metric columns so each group label fits over its block.
  for (std::size_t g = 0; g < t.groups.size(); ++g) {
    std::size_t block = 0;
    for (std::size_t k = 0; k < per_group; ++k) block += w[g * per_group + k] + (k ? 2 : 0);
    const std::size_t need = display_width(t.groups[g]);
    if (need > block) w[g * per_group + per_group - 1] += need - block;
  }
  std::string out = "Scores are in %\n";
  if (!t.groups.empty()) {
    out += pad("", first, true);
    for (std::size_t g = 0; g < t.groups.size(); ++g) {
      std::size_t block = 0;
      for (std::size_t k = 0; k < per_group; ++k) block += w[g * per_group + k] + (k ? 2 : 0);
      out += "  " + pad(t.groups[g], block, true);
    }
    out += "\n";
  }
  out += pad(t.row_header, first, true);
  for (std::size_t c = 0; c < ncols; ++c) out += "  " + pad(t.metrics[c % per_group], w[c], false);
  out += "\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out += pad(t.rows[r], first, true);
    for (std::size_t c = 0; c < ncols; ++c) out += "  " + pad(t.cells[r][c], w[c], false);
    out += "\n";
  }
  return out;
}

std::string confusion_text(const eval::ConfusionMatrix& cm, const std::string& title) {
  char buf[128];
  std::string out = title.empty() ? "" : title + "\n";
  std::snprintf(buf, sizeof(buf), "%-16s%10s%10s\n", "actual\\predicted", "control", "asd");
  out += buf;
  const char* names[2] = {"control", "asd"};
  for (int a = 0; a < 2; ++a) {
    std::snprintf(buf, sizeof(buf), "%-16s%10ld%10ld\n", names[a], cm.counts[a][0], cm.counts[a][1]);
    out += buf;
  }
  return out;
}

std::string confusion_svg(const eval::ConfusionMatrix& cm, const std::string& title) {
  const int cell = 90, left = 110, top = 70;
  long peak = 1;
  for (const auto& row : cm.counts)
    for (long v : row) peak = std::max(peak, v);
  std::string esc;
  for (char c : title) {
    if (c == '<') esc += "&lt;";
    else if (c == '>') esc += "&gt;";
    else if (c == '&') esc += "&amp;";
    else esc += c;
  }
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + 2 * cell + 20 << "\" height=\""
    << top + 2 * cell + 50 << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  s << "<text x=\"10\" y=\"20\" font-weight=\"bold\">" << esc << "</text>\n";
  s << "<text x=\"" << left + cell << "\" y=\"45\" text-anchor=\"middle\">Predicted</text>\n";
  const char* names[2] = {"control", "asd"};
  for (int c = 0; c < 2; ++c)
    s << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\"" << top - 8 << "\" text-anchor=\"middle\">"
      << names[c] << "</text>\n";
  for (int a = 0; a < 2; ++a) {
    s << "<text x=\"" << left - 8 << "\" y=\"" << top + a * cell + cell / 2 + 5 << "\" text-anchor=\"end\">"
      << names[a] << "</text>\n";
    for (int p = 0; p < 2; ++p) {
      const long v = cm.counts[a][p];
      const int shade = 255 - static_cast<int>(200.0 * static_cast<double>(v) / static_cast<double>(peak));
      s << "<rect x=\"" << left + p * cell << "\" y=\"" << top + a * cell << "\" width=\"" << cell << "\" height=\""
        << cell << "\" fill=\"rgb(" << shade << "," << shade << ",255)\" stroke=\"black\"/>\n";
      s << "<text x=\"" << left + p * cell + cell / 2 << "\" y=\"" << top + a * cell + cell / 2 + 6
        << "\" text-anchor=\"middle\" font-size=\"18\" fill=\"" << (shade < 128 ? "white" : "black") << "\">" << v
        << "</text>\n";
    }
  }
  s << "<text x=\"12\" y=\"" << top + cell << "\" transform=\"rotate(-90 12 " << top + cell
    << ")\" text-anchor=\"middle\">Actual</text>\n";
  s << "</svg>\n";
  return s.str();
}

void emit_reports(const ReportBundle& bundle, const std::string& out_dir) {
  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());
  const auto stems = entry_stems(bundle.entries);

  json meta;
  meta["n_experiments"] = bundle.entries.size();
  long failed = 0;
  json entries = json::array();
  json failures = json::array();
  for (std::size_t i = 0; i < bundle.entries.size(); ++i) {
    const auto& e = bundle.entries[i];
    json j;
    j["name"] = e.name;
    j["table"] = e.table;
    j["model"] = e.model;
    j["topology"] = e.topology;
    if (e.report) {
      j["status"] = "ok";
      j["report"] = "reports/" + stems[i] + ".json";
      j["config_digest"] = e.report->config_digest;
      j["config"] = json::parse(e.report->config_json);
    } else {
      ++failed;
      j["status"] = "failed";
      j["error"] = e.error;
      j["error_code"] = e.error_code;
      failures.push_back(j);
    }
    entries.push_back(j);
  }
  meta["n_failed"] = failed;
  meta["experiments"] = entries;
  json tables = json::array();
  for (const auto& t : bundle.tables) tables.push_back("tables/" + t.name + ".csv");
  meta["tables"] = tables;
  write_file(root / "metadata.json", meta.dump(2) + "\n");
  if (failed) write_file(root / "failures.json", failures.dump(2) + "\n");

  if (!bundle.tables.empty()) {
    fs::create_directories(root / "tables");
    for (const auto& t : bundle.tables) {
      write_file(root / "tables" / (t.name + ".csv"), table_to_csv(t));
      write_file(root / "tables" / (t.name + ".txt"), table_to_text(t));
    }
  }
  for (std::size_t i = 0; i < bundle.entries.size(); ++i) {
    const auto& e = bundle.entries[i];
    if (!e.report) continue;
    fs::create_directories(root / "reports");
    fs::create_directories(root / "confusion");
    write_file(root / "reports" / (stems[i] + ".json"), eval::report_to_json(*e.report));
    write_file(root / "reports" / (stems[i] + ".runtime.json"), eval::report_runtime_json(*e.report));
    const std::string title = e.name + " (" + e.model + ", " + e.topology + ")";
    write_file(root / "confusion" / (stems[i] + ".svg"), confusion_svg(e.report->pooled_confusion, title + " pooled"));
    std::string text = confusion_text(e.report->pooled_confusion, title + ": pooled over folds");
    for (const auto& f : e.report->folds)
      text += "\n" + confusion_text(f.confusion, "fold " + std::to_string(f.fold));
    write_file(root / "confusion" / (stems[i] + ".txt"), text);
  }
}

ReportBundle load_reports(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw IoError("'" + dir + "' is not a directory");
  ReportBundle bundle;
  auto from_report = [](const eval::ExperimentReport& r) {
    GridEntry e;
    e.name = r.name;
    e.table = r.table;
    e.model = r.model;
    e.topology = r.topology;
    e.report = r;
    return e;
  };
  if (fs::exists(root / "metadata.json")) {
    const auto meta = json::parse(read_file(root / "metadata.json"), nullptr, false);
    if (meta.is_discarded() || !meta.contains("experiments")) throw FormatError("malformed metadata.json in '" + dir + "'");
    for (const auto& j : meta.at("experiments")) {
      if (j.value("status", "") == "ok") {
        bundle.entries.push_back(from_report(eval::report_from_json(read_file(root / j.at("report").get<std::string>()))));
      } else {
        GridEntry e;
        e.name = j.value("name", "");
        e.table = j.value("table", "");
        e.model = j.value("model", "");
        e.topology = j.value("topology", "");
        e.error = j.value("error", "failed");
        e.error_code = j.value("error_code", static_cast<int>(ErrorCode::kInternal));
        bundle.entries.push_back(e);
      }
    }
  } else {
    const fs::path reports = fs::is_directory(root / "reports") ? root / "reports" : root;
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(reports)) {
      const std::string n = f.path().filename().string();
      if (f.is_regular_file() && f.path().extension() == ".json" && n.find(".runtime.") == std::string::npos)
        files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) bundle.entries.push_back(from_report(eval::report_from_json(read_file(f))));
  }
  bundle.tables = build_tables(bundle.entries);
  return bundle;
}

}  // namespace cosfuse::runner
