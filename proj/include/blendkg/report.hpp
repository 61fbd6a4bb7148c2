#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "blendkg/annotations.hpp"
#include "blendkg/dataset.hpp"
#include "blendkg/error.hpp"
#include "blendkg/io.hpp"
#include "blendkg/metrics.hpp"
#include "blendkg/pipeline.hpp"

namespace blendkg::report {

using eval::Format;

/// Percentage with one decimal, e.g. 0.8966 -> "89.7".
inline std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", std::round(fraction * 1000.0) / 10.0);
  return buf;
}

struct Row {
  std::string label;
  std::vector<std::optional<double>> cells;  // fractions in [0,1]
};

struct Table {
  int number = 0;
  std::string title;
  std::vector<std::string> columns;  // excluding the label column
  std::vector<Row> rows;

  const Row* row(const std::string& label) const {
    for (const auto& r : rows)
      if (r.label == label) return &r;
    return nullptr;
  }
};

inline std::string render_row(const Row& r, const std::string& sep) {
  std::string out = r.label;
  for (const auto& c : r.cells) out += sep + (c ? percent(*c) : std::string("-"));
  return out;
}

/// "Method & MOH-X F1 & ..." header followed by one " & "-joined line per row.
inline std::string render_text(const std::vector<Table>& tables) {
  std::string out;
  for (const auto& t : tables) {
    if (!out.empty()) out += "\n";
    out += "Table " + std::to_string(t.number) + ": " + t.title + "\n";
    std::string header = "Method";
    for (const auto& c : t.columns) header += " & " + c;
    out += header + "\n";
    for (const auto& r : t.rows) out += render_row(r, " & ") + "\n";
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string render_csv(const std::vector<Table>& tables) {
  std::string out;
  if (tables.empty()) return out;
  out += "table,method";
  std::size_t width = 0;
  for (const auto& t : tables) width = std::max(width, t.columns.size());
  for (std::size_t i = 0; i < width; ++i) out += ",col" + std::to_string(i + 1);
  out += "\n";
  for (const auto& t : tables) {
    out += std::to_string(t.number) + ",method";
    for (std::size_t i = 0; i < width; ++i) out += "," + (i < t.columns.size() ? csv_field(t.columns[i]) : "");
    out += "\n";
    for (const auto& r : t.rows) {
      out += std::to_string(t.number) + "," + csv_field(r.label);
      for (std::size_t i = 0; i < width; ++i)
        out += "," + (i < r.cells.size() && r.cells[i] ? percent(*r.cells[i]) : std::string());
      out += "\n";
    }
  }
  return out;
}

/// Label of the row with the highest value in `column`; ties go to the
/// first row.
inline std::optional<std::string> best_row(const Table& t, std::size_t column) {
  std::optional<std::string> best;
  double top = -1;
  for (const auto& r : t.rows)
    if (column < r.cells.size() && r.cells[column] && *r.cells[column] > top) {
      top = *r.cells[column];
      best = r.label;
    }
  return best;
}

// -- run evaluation ------------------------------------------------------------------

/// Scores of one run directory.
struct RunResult {
  std::filesystem::path dir;
  Format format = Format::MohX;
  std::string preset;
  std::string label;
  std::string model_id;
  std::optional<eval::DetectionScore> detection;
  std::optional<double> annotated_accuracy;  // share of positive human judgements
};

/// Gold instances of the run, in manifest order.
inline std::vector<eval::DatasetInstance> run_gold(const std::filesystem::path& dir, const nlohmann::json& manifest) {
  auto format = eval::parse_format(manifest.at("dataset_format").get<std::string>());
  std::filesystem::path path = manifest.at("dataset_path").get<std::string>();
  if (path.is_relative()) path = dir / path;
  auto ds = eval::load_dataset(path, format);
  std::map<std::string, const eval::DatasetInstance*> by_id;
  for (const auto& i : ds.instances) by_id[i.id] = &i;
  std::vector<eval::DatasetInstance> out;
  for (const auto& id : manifest.at("instance_ids")) {
    auto it = by_id.find(id.get<std::string>());
    if (it == by_id.end()) throw JoinError("manifest lists unknown instance '" + id.get<std::string>() + "'");
    out.push_back(*it->second);
  }
  return out;
}

inline nlohmann::json load_manifest(const std::filesystem::path& dir) {
  try {
    return nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(0, "bad manifest in " + dir.string() + ": " + e.what());
  }
}

/// Detection scores for text runs; for runs with `annotations.csv`, the
/// share of positive judgements.
inline RunResult evaluate_run(const std::filesystem::path& dir) {
  auto manifest = load_manifest(dir);
  RunResult r;
  r.dir = dir;
  r.format = eval::parse_format(manifest.at("dataset_format").get<std::string>());
  r.preset = manifest.value("preset", "");
  r.label = manifest.value("label", r.preset);
  r.model_id = manifest.value("model_id", "");
  auto records = pipeline::load_records(dir / "records.jsonl");
  auto gold = run_gold(dir, manifest);
  if (r.format != Format::Visual && r.format != Format::WG) r.detection = eval::score_detection(records, gold);
  std::error_code ec;
  if (std::filesystem::exists(dir / "annotations.csv", ec))
    r.annotated_accuracy = eval::label_rate(eval::load_annotations(dir / "annotations.csv"), "1");
  return r;
}

// -- paper-shaped tables -------------------------------------------------------------

namespace detail {

inline const RunResult* find(const std::vector<RunResult>& runs, Format f, const std::string& label) {
  for (const auto& r : runs)
    if (r.format == f && r.label == label) return &r;
  return nullptr;
}

inline std::optional<double> f1(const RunResult* r) {
  return r && r->detection ? std::optional<double>(r->detection->f1) : std::nullopt;
}
inline std::optional<double> acc(const RunResult* r) {
  return r && r->detection ? std::optional<double>(r->detection->accuracy) : std::nullopt;
}
inline std::optional<double> annotated(const RunResult* r) {
  return r ? r->annotated_accuracy : std::nullopt;
}

inline bool any(const Row& r) {
  for (const auto& c : r.cells)
    if (c) return true;
  return false;
}

/// Row labels that appear in the runs but not in `order`, sorted.
inline std::vector<std::string> extra_labels(const std::vector<RunResult>& runs, const std::set<Format>& formats,
                                             const std::vector<std::string>& order) {
  std::set<std::string> known(order.begin(), order.end()), extra;
  for (const auto& r : runs)
    if (formats.count(r.format) && !known.count(r.label)) extra.insert(r.label);
  return {extra.begin(), extra.end()};
}

}  // namespace detail

/// Published baseline figures reported next to the measured rows.
struct Baseline {
  std::string label;
  std::vector<std::optional<double>> cells;
};

inline std::vector<Baseline> table_two_baselines() {
  return {{"MetaPRO", {0.84, 0.81, 0.79, 0.70}}, {"TSI CMT*", {0.825, 0.829, 0.66, 0.668}}};
}

inline std::vector<Baseline> table_three_baselines() { return {{"MetaPRO", {0.691, 0.698}}}; }

/// MOH-X and TroFi F1/accuracy.
inline Table table_two(const std::vector<RunResult>& runs, bool with_baselines = true) {
  Table t{2, "metaphor detection on MOH-X and TroFi", {"MOH-X F1", "MOH-X Acc.", "TroFi F1", "TroFi Acc."}, {}};
  if (with_baselines)
    for (const auto& b : table_two_baselines()) t.rows.push_back({b.label, b.cells});
  std::vector<std::string> order = {"LAG"};
  auto extra = detail::extra_labels(runs, {Format::MohX, Format::TroFi}, order);
  order.insert(order.end(), extra.begin(), extra.end());
  for (const auto& label : order) {
    auto m = detail::find(runs, Format::MohX, label);
    auto tr = detail::find(runs, Format::TroFi, label);
    Row r{label, {detail::f1(m), detail::acc(m), detail::f1(tr), detail::acc(tr)}};
    if (detail::any(r)) t.rows.push_back(r);
  }
  return t;
}

/// BCMTD accuracy/F1.
inline Table table_three(const std::vector<RunResult>& runs, bool with_baselines = true) {
  Table t{3, "metaphor detection on BCMTD", {"Accuracy", "F1 Score"}, {}};
  auto add = [&](const std::string& label) {
    auto b = detail::find(runs, Format::BCMTD, label);
    Row r{label, {detail::acc(b), detail::f1(b)}};
    if (detail::any(r)) t.rows.push_back(r);
  };
  add("LAG");
  if (with_baselines)
    for (const auto& b : table_three_baselines()) t.rows.push_back({b.label, b.cells});
  std::vector<std::string> order = {"LAG", "Few-Shot 12", "Few-Shot 6", "Few-Shot 3", "Zero-shot"};
  for (std::size_t i = 1; i < order.size(); ++i) add(order[i]);
  for (const auto& l : detail::extra_labels(runs, {Format::BCMTD}, order)) add(l);
  return t;
}

inline Table annotated_table(int number, const std::string& title, const std::vector<RunResult>& runs,
                             const std::vector<std::string>& order, bool include_extra) {
  Table t{number, title, {"Accuracy"}, {}};
  auto labels = order;
  if (include_extra) {
    auto extra = detail::extra_labels(runs, {Format::Visual}, order);
    labels.insert(labels.end(), extra.begin(), extra.end());
  }
  for (const auto& label : labels) {
    Row r{label, {detail::annotated(detail::find(runs, Format::Visual, label))}};
    if (detail::any(r)) t.rows.push_back(r);
  }
  return t;
}

/// Visual understanding configurations.
inline Table table_four(const std::vector<RunResult>& runs) {
  return annotated_table(4, "visual metaphor understanding", runs,
                         {"LAG sent+img", "LAG no sent", "LAG no img", "Few-Shot (3)"}, false);
}

/// Visual ablations.
inline Table table_five(const std::vector<RunResult>& runs) {
  return annotated_table(5, "visual ablations", runs, {"LAG no sent", "No Blending", "No Graph"}, false);
}

inline Table detection_by_dataset(int number, const std::string& title, const std::vector<RunResult>& runs,
                                  const std::vector<std::string>& labels,
                                  const std::function<std::string(const RunResult&)>& key) {
  Table t{number, title, {"MOH-X Acc.", "MOH-X F1", "TroFi Acc.", "TroFi F1", "BCMTD Acc.", "BCMTD F1"}, {}};
  for (const auto& label : labels) {
    Row r{label, {}};
    for (auto f : {Format::MohX, Format::TroFi, Format::BCMTD}) {
      const RunResult* hit = nullptr;
      for (const auto& run : runs)
        if (run.format == f && key(run) == label) hit = &run;
      r.cells.push_back(detail::acc(hit));
      r.cells.push_back(detail::f1(hit));
    }
    if (detail::any(r)) t.rows.push_back(r);
  }
  return t;
}

/// LAG detection per model.
inline Table table_six(const std::vector<RunResult>& runs) {
  std::vector<std::string> models;
  for (const auto& r : runs)
    if (r.label == "LAG" && r.format != Format::Visual && r.format != Format::WG &&
        std::find(models.begin(), models.end(), r.model_id) == models.end())
      models.push_back(r.model_id);
  std::vector<RunResult> lag;
  for (const auto& r : runs)
    if (r.label == "LAG") lag.push_back(r);
  return detection_by_dataset(6, "LAG detection per model", lag, models,
                              [](const RunResult& r) { return r.model_id; });
}

/// Textual ablations.
inline Table table_seven(const std::vector<RunResult>& runs) {
  return detection_by_dataset(7, "textual ablations", runs, {"LAG", "No Blending", "No Graph"},
                              [](const RunResult& r) { return r.label; });
}

inline Table table(int number, const std::vector<RunResult>& runs) {
  switch (number) {
    case 2: return table_two(runs);
    case 3: return table_three(runs);
    case 4: return table_four(runs);
    case 5: return table_five(runs);
    case 6: return table_six(runs);
    case 7: return table_seven(runs);
  }
  throw ConfigError("no table " + std::to_string(number) + " (expected 2-7)");
}

}  // namespace blendkg::report
