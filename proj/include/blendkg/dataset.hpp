#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "blendkg/error.hpp"
#include "blendkg/io.hpp"

namespace blendkg::eval {

enum class Modality { Text, Image };
enum class Category { GenericConceptual, Scientific, Literal };
enum class Format { MohX, TroFi, WG, BCMTD, Visual };

inline const char* to_string(Category c) {
  switch (c) {
    case Category::GenericConceptual: return "GenericConceptual";
    case Category::Scientific: return "Scientific";
    case Category::Literal: return "Literal";
  }
  return "";
}

inline Format parse_format(const std::string& s) {
  if (s == "mohx") return Format::MohX;
  if (s == "trofi") return Format::TroFi;
  if (s == "wg") return Format::WG;
  if (s == "bcmtd") return Format::BCMTD;
  if (s == "visual") return Format::Visual;
  throw ConfigError("unknown dataset format '" + s + "' (expected mohx|trofi|wg|bcmtd|visual)");
}

inline const char* to_string(Format f) {
  switch (f) {
    case Format::MohX: return "mohx";
    case Format::TroFi: return "trofi";
    case Format::WG: return "wg";
    case Format::BCMTD: return "bcmtd";
    case Format::Visual: return "visual";
  }
  return "";
}

struct DatasetInstance {
  std::string id;
  Modality modality = Modality::Text;
  std::optional<std::string> text;
  std::optional<std::string> image_ref;
  std::optional<std::string> target_word;
  std::optional<bool> gold_label;
  std::optional<std::string> gold_source;
  std::optional<std::string> gold_target;
  std::optional<std::string> gold_property;
  std::optional<Category> category;
};

/// Loaded dataset. Visual manifests may also list the in-context examples,
/// which are kept apart from the test items.
struct Dataset {
  Format format = Format::MohX;
  std::vector<DatasetInstance> instances;
  std::vector<DatasetInstance> examples;
  std::filesystem::path base_dir;  // image_ref is relative to this
};

/// RFC 4180 CSV: quoted fields, doubled quotes, embedded newlines.
/// Each row carries the 1-based line number it started on.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> read_csv(const std::string& text) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1, row_line = 1;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    bool blank = row.size() == 1 && row[0].empty();
    if (!blank) rows.emplace_back(row_line, std::move(row));
    row.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) throw FormatError(line, "stray quote inside unquoted field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        row_line = ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw FormatError(row_line, "unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline bool parse_label(const std::string& raw, std::size_t row) {
  auto v = lower(raw);
  if (v == "1" || v == "true" || v == "metaphorical" || v == "met") return true;
  if (v == "0" || v == "false" || v == "literal" || v == "lit") return false;
  throw FormatError(row, "label '" + raw + "' is not binary");
}

inline Category parse_category(const std::string& raw, std::size_t row) {
  auto v = lower(raw);
  if (v == "genericconceptual" || v == "generic" || v == "conceptual") return Category::GenericConceptual;
  if (v == "scientific") return Category::Scientific;
  if (v == "literal" || v == "vua") return Category::Literal;
  throw FormatError(row, "unknown category '" + raw + "'");
}

inline std::vector<std::string> expected_header(Format f) {
  switch (f) {
    case Format::MohX:
    case Format::TroFi: return {"id", "sentence", "target_word", "label"};
    case Format::WG: return {"id", "sentence", "source", "target"};
    case Format::BCMTD: return {"id", "sentence", "category", "label", "source", "target"};
    case Format::Visual: return {};
  }
  return {};
}

inline std::string require(const std::string& v, const char* column, std::size_t row) {
  if (v.empty()) throw FormatError(row, std::string("empty ") + column);
  return v;
}

inline std::optional<std::string> optional_field(const std::string& v) {
  if (v.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

inline Dataset parse_csv_dataset(const std::string& text, Format format) {
  Dataset ds;
  ds.format = format;
  auto rows = read_csv(text);
  auto header = detail::expected_header(format);
  if (rows.empty()) throw FormatError(1, "missing header");
  auto got = rows.front().second;
  for (auto& h : got) h = detail::lower(h);
  if (got != header) {
    std::string want;
    for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
    throw FormatError(rows.front().first, "expected header " + want);
  }
  std::set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto& [line, f] = rows[r];
    if (f.size() != header.size())
      throw FormatError(line, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    DatasetInstance in;
    in.id = detail::require(f[0], "id", line);
    if (!ids.insert(in.id).second) throw FormatError(line, "duplicate id '" + in.id + "'");
    in.text = detail::require(f[1], "sentence", line);
    switch (format) {
      case Format::MohX:
      case Format::TroFi:
        in.target_word = detail::optional_field(f[2]);
        in.gold_label = detail::parse_label(f[3], line);
        break;
      case Format::WG:
        in.gold_label = true;
        in.gold_source = detail::require(f[2], "source", line);
        in.gold_target = detail::require(f[3], "target", line);
        break;
      case Format::BCMTD:
        in.category = detail::parse_category(f[2], line);
        in.gold_label = detail::parse_label(f[3], line);
        if ((*in.category == Category::Literal) == *in.gold_label)
          throw FormatError(line, "category and label disagree");
        if (*in.gold_label) {
          in.gold_source = detail::require(f[4], "source", line);
          in.gold_target = detail::require(f[5], "target", line);
        }
        break;
      case Format::Visual:
        break;
    }
    ds.instances.push_back(std::move(in));
  }
  return ds;
}

/// Visual manifest: a JSON array of {id, image_path, gold_source,
/// gold_target, gold_property[, role: "example"]}.
inline Dataset parse_visual_manifest(const std::string& text) {
  Dataset ds;
  ds.format = Format::Visual;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(0, std::string("not JSON: ") + e.what());
  }
  if (!j.is_array()) throw FormatError(0, "manifest must be a JSON array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& row = j[i];
    std::size_t n = i + 1;
    auto str = [&](const char* key) -> std::string {
      if (!row.contains(key) || !row[key].is_string() || row[key].get<std::string>().empty())
        throw FormatError(n, std::string("missing ") + key);
      return row[key].get<std::string>();
    };
    DatasetInstance in;
    in.modality = Modality::Image;
    in.id = str("id");
    if (!ids.insert(in.id).second) throw FormatError(n, "duplicate id '" + in.id + "'");
    in.image_ref = str("image_path");
    in.gold_label = true;
    in.gold_source = str("gold_source");
    in.gold_target = str("gold_target");
    in.gold_property = str("gold_property");
    if (row.contains("sentence") && row["sentence"].is_string()) in.text = row["sentence"].get<std::string>();
    bool example = row.value("role", "") == "example";
    (example ? ds.examples : ds.instances).push_back(std::move(in));
  }
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path, Format format) {
  auto text = read_file(path);
  auto ds = format == Format::Visual ? parse_visual_manifest(text) : parse_csv_dataset(text, format);
  ds.base_dir = path.parent_path();
  return ds;
}

/// Table I figures for the full original files.
struct Reference {
  std::size_t instances;
  double metaphorical_percent;
  std::size_t samples;
};

inline Reference table_one(Format f) {
  switch (f) {
    case Format::MohX: return {647, 48.7, 300};
    case Format::TroFi: return {3737, 43.5, 300};
    case Format::WG: return {447, 100.0, 447};
    case Format::BCMTD: return {147, 66.6, 147};
    case Format::Visual: return {51, 100.0, 48};
  }
  return {};
}

struct ReferenceCheck {
  std::size_t instances = 0;
  double metaphorical_percent = 0;
  bool count_matches = false;
  bool fraction_matches = false;
  std::vector<std::string> notes;
};

/// Compares a loaded full dataset with its Table I row. Percentages are
/// compared at one decimal. For BCMTD only the sentence count is binding;
/// for visual data the in-context examples count towards the instances.
inline ReferenceCheck check_reference(const Dataset& ds) {
  auto ref = table_one(ds.format);
  ReferenceCheck c;
  c.instances = ds.instances.size() + ds.examples.size();
  std::size_t met = 0;
  for (const auto& i : ds.instances) met += i.gold_label.value_or(false) ? 1 : 0;
  c.metaphorical_percent = ds.instances.empty() ? 0 : 100.0 * met / ds.instances.size();
  c.count_matches = c.instances == ref.instances;
  c.fraction_matches = std::round(c.metaphorical_percent * 10) == std::round(ref.metaphorical_percent * 10);
  if (ds.format == Format::BCMTD && !c.fraction_matches) {
    c.notes.push_back("BCMTD metaphorical share differs from the tabulated 66.6% (informational only)");
    c.fraction_matches = true;
  }
  if (ds.format == Format::Visual && ds.instances.size() != ref.samples)
    c.notes.push_back("expected " + std::to_string(ref.samples) + " test images besides the examples");
  return c;
}

/// n/2 metaphorical and n/2 literal instances chosen by a seeded
/// Fisher-Yates shuffle of each class. Output lists the metaphorical half
/// first, each half in shuffled order.
inline std::vector<DatasetInstance> balanced_sample(const std::vector<DatasetInstance>& instances, std::size_t n,
                                                    std::uint64_t seed) {
  if (n % 2 != 0) throw std::invalid_argument("balanced sample size must be even");
  std::vector<const DatasetInstance*> pos, neg;
  for (const auto& i : instances) {
    if (!i.gold_label) throw std::invalid_argument("instance " + i.id + " has no gold label");
    (*i.gold_label ? pos : neg).push_back(&i);
  }
  if (pos.size() < n / 2 || neg.size() < n / 2)
    throw InsufficientClass("need " + std::to_string(n / 2) + " per class, have " + std::to_string(pos.size()) +
                            " metaphorical and " + std::to_string(neg.size()) + " literal");
  std::mt19937_64 rng(seed);
  auto shuffle_take = [&](std::vector<const DatasetInstance*>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(v[i - 1], v[j]);
    }
    v.resize(n / 2);
  };
  shuffle_take(pos);
  shuffle_take(neg);
  std::vector<DatasetInstance> out;
  for (auto* p : pos) out.push_back(*p);
  for (auto* p : neg) out.push_back(*p);
  return out;
}

}  // namespace blendkg::eval
