#pragma once

#include <map>
#include <string>
#include <vector>

#include "blendkg/dataset.hpp"
#include "blendkg/error.hpp"
#include "blendkg/io.hpp"

namespace blendkg::eval {

/// items x annotators table of categorical labels.
struct AnnotationMatrix {
  std::vector<std::string> items;
  std::vector<std::string> annotators;
  std::vector<std::vector<std::string>> labels;  // labels[item][annotator]

  static AnnotationMatrix from_rows(std::vector<std::vector<std::string>> rows) {
    AnnotationMatrix m;
    m.labels = std::move(rows);
    for (std::size_t i = 0; i < m.labels.size(); ++i) m.items.push_back("item" + std::to_string(i + 1));
    std::size_t width = m.labels.empty() ? 0 : m.labels.front().size();
    for (std::size_t a = 0; a < width; ++a) m.annotators.push_back("a" + std::to_string(a + 1));
    m.check();
    return m;
  }

  void check() const {
    if (labels.size() != items.size()) throw FormatError(0, "annotation matrix rows do not match items");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].size() != annotators.size())
        throw FormatError(i + 1, "annotation matrix is not rectangular");
      for (const auto& l : labels[i])
        if (l.empty()) throw FormatError(i + 1, "missing annotation for item " + items[i]);
    }
  }
};

/// CSV `item_id,annotator_id,label`. Items and annotators keep their
/// first-appearance order; every item needs one label per annotator.
inline AnnotationMatrix parse_annotations(const std::string& text) {
  auto rows = read_csv(text);
  if (rows.empty()) throw FormatError(1, "missing header");
  auto header = rows.front().second;
  for (auto& h : header) h = detail::lower(h);
  if (header != std::vector<std::string>{"item_id", "annotator_id", "label"})
    throw FormatError(rows.front().first, "expected header item_id,annotator_id,label");
  AnnotationMatrix m;
  std::map<std::string, std::size_t> item_ix, ann_ix;
  std::map<std::pair<std::size_t, std::size_t>, std::pair<std::string, std::size_t>> cells;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, f] = rows[r];
    if (f.size() != 3) throw FormatError(line, "expected 3 fields, got " + std::to_string(f.size()));
    const auto& item = detail::require(f[0], "item_id", line);
    const auto& ann = detail::require(f[1], "annotator_id", line);
    const auto& label = detail::require(f[2], "label", line);
    auto [it, new_item] = item_ix.emplace(item, m.items.size());
    if (new_item) m.items.push_back(item);
    auto [at, new_ann] = ann_ix.emplace(ann, m.annotators.size());
    if (new_ann) m.annotators.push_back(ann);
    if (!cells.emplace(std::make_pair(it->second, at->second), std::make_pair(label, line)).second)
      throw FormatError(line, "second label from " + ann + " for " + item);
  }
  m.labels.assign(m.items.size(), std::vector<std::string>(m.annotators.size()));
  for (const auto& [key, value] : cells) m.labels[key.first][key.second] = value.first;
  for (std::size_t i = 0; i < m.items.size(); ++i)
    for (std::size_t a = 0; a < m.annotators.size(); ++a)
      if (m.labels[i][a].empty())
        throw FormatError(0, "no label from " + m.annotators[a] + " for " + m.items[i]);
  if (m.annotators.size() < 2) throw FormatError(0, "need at least 2 annotators");
  return m;
}

inline AnnotationMatrix load_annotations(const std::filesystem::path& path) { return parse_annotations(read_file(path)); }

/// Per-item modal label; a tie for the top count raises TieError.
inline std::vector<std::string> majority_vote(const AnnotationMatrix& m) {
  m.check();
  std::vector<std::string> out;
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    std::map<std::string, std::size_t> counts;
    for (const auto& l : m.labels[i]) ++counts[l];
    std::size_t best = 0, at_best = 0;
    std::string label;
    for (const auto& [l, c] : counts) {
      if (c > best) {
        best = c;
        at_best = 1;
        label = l;
      } else if (c == best) {
        ++at_best;
      }
    }
    if (at_best > 1) throw TieError("tied vote for item " + m.items[i]);
    out.push_back(label);
  }
  return out;
}

/// Share of all cells carrying `label`.
inline double label_rate(const AnnotationMatrix& m, const std::string& label) {
  m.check();
  std::size_t hits = 0, total = 0;
  for (const auto& row : m.labels)
    for (const auto& l : row) {
      ++total;
      hits += l == label ? 1 : 0;
    }
  return total == 0 ? 0.0 : static_cast<double>(hits) / total;
}

}  // namespace blendkg::eval
