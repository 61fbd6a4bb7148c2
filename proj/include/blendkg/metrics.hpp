#pragma once

#include <algorithm>
#include <functional>
#include <httplib.h>
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
#include "blendkg/pipeline.hpp"

namespace blendkg::eval {

using pipeline::PipelineRecord;

// -- detection -------------------------------------------------------------------

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t n() const { return tp + fp + tn + fn; }
  double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }
  double accuracy() const { return n() == 0 ? 0.0 : static_cast<double>(tp + tn) / n(); }
  /// 2PR/(P+R) in count form; 0 when there are no true positives.
  double f1() const {
    std::size_t denom = 2 * tp + fp + fn;
    return tp == 0 ? 0.0 : static_cast<double>(2 * tp) / denom;
  }
};

struct DetectionScore {
  double accuracy = 0;
  double f1 = 0;
  Confusion confusion;
  std::size_t error_records = 0;
};

inline DetectionScore score_confusion(const Confusion& c, std::size_t errors = 0) {
  return {c.accuracy(), c.f1(), c, errors};
}

namespace detail {

template <class Record>
std::map<std::string, const Record*> index_records(const std::vector<Record>& records) {
  std::map<std::string, const Record*> out;
  for (const auto& r : records)
    if (!out.emplace(r.instance_id, &r).second) throw JoinError("duplicate record for '" + r.instance_id + "'");
  return out;
}

/// Records and gold must cover the same id set.
template <class Record>
std::map<std::string, const Record*> join(const std::vector<Record>& records,
                                          const std::vector<DatasetInstance>& gold) {
  auto by_id = index_records(records);
  std::set<std::string> gold_ids;
  for (const auto& g : gold) {
    gold_ids.insert(g.id);
    if (!by_id.count(g.id)) throw JoinError("no record for gold instance '" + g.id + "'");
  }
  for (const auto& [id, _] : by_id)
    if (!gold_ids.count(id)) throw JoinError("record '" + id + "' has no gold instance");
  return by_id;
}

}  // namespace detail

/// Positive class is "metaphorical". Records without a verdict count as
/// wrong predictions.
inline DetectionScore score_detection(const std::vector<PipelineRecord>& records,
                                      const std::vector<DatasetInstance>& gold) {
  auto by_id = detail::join(records, gold);
  Confusion c;
  std::size_t errors = 0;
  for (const auto& g : gold) {
    if (!g.gold_label) throw JoinError("gold instance '" + g.id + "' has no label");
    const auto& rec = *by_id.at(g.id);
    bool truth = *g.gold_label;
    if (!rec.verdict) {
      ++errors;
      ++(truth ? c.fn : c.fp);
      continue;
    }
    bool pred = rec.verdict->metaphorical;
    if (pred && truth) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return score_confusion(c, errors);
}

// -- understanding -------------------------------------------------------------

struct ScoreQuery {
  std::string instance_id;
  std::string role;  // "source" or "target"
  std::string candidate;
  std::string reference;
};

/// Similarity between a predicted and a gold label. Positive means correct.
using Scorer = std::function<double(const ScoreQuery&)>;

/// 1 when the strings are equal, -1 otherwise.
inline Scorer exact_scorer() {
  return [](const ScoreQuery& q) { return q.candidate == q.reference ? 1.0 : -1.0; };
}

/// Remote scorer: POST {"candidate", "reference"} to `url`, read {"score"}.
inline Scorer http_scorer(const std::string& url, std::chrono::seconds timeout = std::chrono::seconds(30)) {
  auto ep = split_url(url);
  return [ep, timeout](const ScoreQuery& q) {
    httplib::Client client(ep.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    nlohmann::json body = {{"candidate", q.candidate}, {"reference", q.reference}};
    auto res = client.Post(ep.path, body.dump(), "application/json");
    if (!res) throw ScorerError("scorer at " + ep.origin + ep.path + " unreachable: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw ScorerError("scorer returned HTTP " + std::to_string(res->status));
    try {
      return nlohmann::json::parse(res->body).at("score").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ScorerError(std::string("malformed scorer response: ") + e.what());
    }
  };
}

struct InstanceScore {
  std::string instance_id;
  std::optional<double> source_score;
  std::optional<double> target_score;
  bool success = false;
};

struct UnderstandingScore {
  double success_rate = 0;
  std::size_t successes = 0;
  std::size_t evaluated = 0;
  std::vector<InstanceScore> per_instance;
};

/// An instance succeeds iff both the source and the target score strictly
/// above zero. Only gold instances with a source and a target are scored;
/// a record without a predicted pair fails.
inline UnderstandingScore score_understanding(const std::vector<PipelineRecord>& records,
                                              const std::vector<DatasetInstance>& gold, const Scorer& scorer) {
  auto by_id = detail::join(records, gold);
  UnderstandingScore out;
  for (const auto& g : gold) {
    if (!g.gold_source || !g.gold_target) continue;
    const auto& rec = *by_id.at(g.id);
    InstanceScore s{g.id, std::nullopt, std::nullopt, false};
    if (rec.verdict && rec.verdict->source_label && rec.verdict->target_label) {
      try {
        s.source_score = scorer({g.id, "source", *rec.verdict->source_label, *g.gold_source});
        s.target_score = scorer({g.id, "target", *rec.verdict->target_label, *g.gold_target});
      } catch (const ScorerError&) {
        throw;
      } catch (const std::exception& e) {
        throw ScorerError(e.what());
      }
      s.success = *s.source_score > 0 && *s.target_score > 0;
    }
    out.successes += s.success ? 1 : 0;
    out.per_instance.push_back(s);
  }
  out.evaluated = out.per_instance.size();
  out.success_rate = out.evaluated == 0 ? 0.0 : static_cast<double>(out.successes) / out.evaluated;
  return out;
}

/// Scorer backed by human judgements: item `<instance>/<role>` voted "1"
/// scores 1, anything else -1.
inline Scorer annotation_scorer(const AnnotationMatrix& m, const std::string& positive = "1") {
  auto votes = majority_vote(m);
  std::map<std::string, std::string> by_item;
  for (std::size_t i = 0; i < m.items.size(); ++i) by_item[m.items[i]] = votes[i];
  return [by_item, positive](const ScoreQuery& q) {
    auto it = by_item.find(q.instance_id + "/" + q.role);
    if (it == by_item.end()) throw ScorerError("no judgement for " + q.instance_id + "/" + q.role);
    return it->second == positive ? 1.0 : -1.0;
  };
}

// -- error taxonomy ----------------------------------------------------------------

inline const std::vector<std::string>& textual_error_categories() {
  static const std::vector<std::string> v = {"WrongSubelementMapping", "TooSpecific", "TooGeneral",
                                             "SwitchedSourceTarget", "LiteralAsMetaphor"};
  return v;
}

inline const std::vector<std::string>& visual_error_categories() {
  static const std::vector<std::string> v = {"IncorrectObjects", "IncorrectProperty", "IncorrectTargetSymbol"};
  return v;
}

struct TaggedError {
  std::string instance_id;
  std::string category;
};

struct ErrorShare {
  std::string category;
  std::size_t count = 0;
  double percent = 0;
};

struct ErrorDistribution {
  std::size_t total = 0;
  std::vector<ErrorShare> shares;  // every category of the tag set, in canonical order

  double percent(const std::string& category) const {
    for (const auto& s : shares)
      if (s.category == category) return s.percent;
    throw UnknownCategory(category);
  }
};

/// Percentage distribution over one of the two tag sets. Tags from both
/// sets in one tally are rejected.
inline ErrorDistribution tally_errors(const std::vector<TaggedError>& tagged) {
  const auto& text = textual_error_categories();
  const auto& vis = visual_error_categories();
  auto in = [](const std::vector<std::string>& set, const std::string& c) {
    return std::find(set.begin(), set.end(), c) != set.end();
  };
  const std::vector<std::string>* set = nullptr;
  std::map<std::string, std::size_t> counts;
  for (const auto& t : tagged) {
    const std::vector<std::string>* own = in(text, t.category) ? &text : in(vis, t.category) ? &vis : nullptr;
    if (!own) throw UnknownCategory("unknown error category '" + t.category + "' on " + t.instance_id);
    if (set && set != own) throw UnknownCategory("textual and visual categories mixed at " + t.instance_id);
    set = own;
    ++counts[t.category];
  }
  ErrorDistribution d;
  d.total = tagged.size();
  if (!set) return d;
  for (const auto& c : *set) {
    auto n = counts[c];
    d.shares.push_back({c, n, 100.0 * n / d.total});
  }
  return d;
}

/// CSV `instance_id,category`.
inline std::vector<TaggedError> parse_error_tags(const std::string& text) {
  auto rows = read_csv(text);
  if (rows.empty()) throw FormatError(1, "missing header");
  auto header = rows.front().second;
  for (auto& h : header) h = detail::lower(h);
  if (header != std::vector<std::string>{"instance_id", "category"})
    throw FormatError(rows.front().first, "expected header instance_id,category");
  std::vector<TaggedError> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, f] = rows[r];
    if (f.size() != 2) throw FormatError(line, "expected 2 fields, got " + std::to_string(f.size()));
    out.push_back({detail::require(f[0], "instance_id", line), detail::require(f[1], "category", line)});
  }
  return out;
}

}  // namespace blendkg::eval
