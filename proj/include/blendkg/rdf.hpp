#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace blendkg::rdf {

namespace ns {
inline constexpr std::string_view kRdf = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline constexpr std::string_view kRdfs = "http://www.w3.org/2000/01/rdf-schema#";
inline constexpr std::string_view kOwl = "http://www.w3.org/2002/07/owl#";
inline constexpr std::string_view kXsd = "http://www.w3.org/2001/XMLSchema#";
inline constexpr std::string_view kBlending =
    "http://www.ontologydesignpatterns.org/ont/blending/blending.owl#";
inline constexpr std::string_view kPerspectivisation =
    "http://www.ontologydesignpatterns.org/ont/persp/perspectivisation.owl#";
inline constexpr std::string_view kMetanet = "https://w3id.org/framester/metanet/schema/";
inline constexpr std::string_view kFred = "http://www.ontologydesignpatterns.org/ont/fred/domain.owl#";
inline constexpr std::string_view kDefaultInstanceBase = "http://example.org/";
}  // namespace ns

inline std::string xsd(std::string_view local) { return std::string(ns::kXsd) + std::string(local); }

/// An RDF term. Ordering is IRIs < blank nodes < literals, then lexically.
class Term {
 public:
  enum class Kind { Iri = 0, Blank = 1, Literal = 2 };

  Term() = default;

  static Term iri(std::string value) {
    if (value.empty()) throw std::invalid_argument("empty IRI");
    for (char c : value) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '<' || c == '>' || c == '"')
        throw std::invalid_argument("IRI contains illegal character: " + value);
    }
    if (value.find(':') == std::string::npos)
      throw std::invalid_argument("IRI is not absolute: " + value);
    return Term(Kind::Iri, std::move(value), std::nullopt, std::nullopt);
  }

  static Term blank(std::string label) {
    if (label.empty()) throw std::invalid_argument("empty blank node label");
    return Term(Kind::Blank, std::move(label), std::nullopt, std::nullopt);
  }

  static Term literal(std::string lexical, std::optional<std::string> datatype = std::nullopt,
                      std::optional<std::string> language = std::nullopt) {
    if (datatype && language)
      throw std::invalid_argument("literal cannot carry both datatype and language");
    return Term(Kind::Literal, std::move(lexical), std::move(datatype), std::move(language));
  }

  static Term boolean(bool v) { return literal(v ? "true" : "false", xsd("boolean")); }

  Kind kind() const noexcept { return kind_; }
  bool is_iri() const noexcept { return kind_ == Kind::Iri; }
  bool is_blank() const noexcept { return kind_ == Kind::Blank; }
  bool is_literal() const noexcept { return kind_ == Kind::Literal; }

  /// IRI string, blank label, or literal lexical form.
  const std::string& value() const noexcept { return value_; }
  const std::optional<std::string>& datatype() const noexcept { return datatype_; }
  const std::optional<std::string>& language() const noexcept { return language_; }

  auto operator<=>(const Term&) const = default;
  bool operator==(const Term&) const = default;

 private:
  Term(Kind k, std::string v, std::optional<std::string> dt, std::optional<std::string> lang)
      : kind_(k), value_(std::move(v)), datatype_(std::move(dt)), language_(std::move(lang)) {}

  Kind kind_ = Kind::Iri;
  std::string value_;
  std::optional<std::string> datatype_;
  std::optional<std::string> language_;
};

inline Term iri(std::string v) { return Term::iri(std::move(v)); }

struct Triple {
  Term subject;
  Term predicate;
  Term object;

  auto operator<=>(const Triple&) const = default;
  bool operator==(const Triple&) const = default;
};

/// True for characters allowed anywhere in a compacted local name.
inline bool is_local_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '-' || c == '.' || static_cast<unsigned char>(c) >= 0x80;
}

inline bool is_safe_local_name(std::string_view local) {
  if (local.empty()) return true;
  if (local.front() == '-' || local.front() == '.' || local.back() == '.') return false;
  return std::all_of(local.begin(), local.end(), is_local_name_char);
}

inline bool is_valid_prefix_name(std::string_view p) {
  if (p.empty()) return true;  // the default ":" prefix
  if (!((p.front() >= 'a' && p.front() <= 'z') || (p.front() >= 'A' && p.front() <= 'Z')))
    return false;
  if (p.back() == '.') return false;
  return std::all_of(p.begin(), p.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == '.';
  });
}

class PrefixMap {
 public:
  PrefixMap() = default;

  void bind(const std::string& prefix, const std::string& ns) { map_[prefix] = ns; }
  void unbind(const std::string& prefix) { map_.erase(prefix); }

  bool contains(const std::string& prefix) const { return map_.count(prefix) != 0; }

  std::optional<std::string> namespace_of(const std::string& prefix) const {
    auto it = map_.find(prefix);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::string> prefix_for(const std::string& ns) const {
    for (const auto& [p, n] : map_)
      if (n == ns) return p;
    return std::nullopt;
  }

  /// `prefix:local` to a full IRI; nullopt when the prefix is unbound.
  std::optional<std::string> expand(std::string_view curie) const {
    auto colon = curie.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto it = map_.find(std::string(curie.substr(0, colon)));
    if (it == map_.end()) return std::nullopt;
    return it->second + std::string(curie.substr(colon + 1));
  }

  /// Longest-namespace compaction, ties broken by prefix name. Returns nullopt
  /// when no binding yields a local name that re-parses unchanged.
  std::optional<std::string> compact(std::string_view iri_value) const {
    const std::pair<const std::string, std::string>* best = nullptr;
    for (const auto& entry : map_) {
      const auto& n = entry.second;
      if (n.empty() || iri_value.size() < n.size() || iri_value.substr(0, n.size()) != n) continue;
      if (!is_safe_local_name(iri_value.substr(n.size()))) continue;
      if (!best || n.size() > best->second.size()) best = &entry;
    }
    if (!best) return std::nullopt;
    return best->first + ":" + std::string(iri_value.substr(best->second.size()));
  }

  const std::map<std::string, std::string>& entries() const noexcept { return map_; }
  bool empty() const noexcept { return map_.empty(); }

  bool operator==(const PrefixMap&) const = default;

 private:
  std::map<std::string, std::string> map_;
};

/// The prefixes every SKG/XKG is allowed to use without declaring them.
inline PrefixMap default_prefixes(std::string_view instance_base = ns::kDefaultInstanceBase) {
  PrefixMap m;
  m.bind("rdf", std::string(ns::kRdf));
  m.bind("rdfs", std::string(ns::kRdfs));
  m.bind("owl", std::string(ns::kOwl));
  m.bind("xsd", std::string(ns::kXsd));
  m.bind("bl", std::string(ns::kBlending));
  m.bind("cp", std::string(ns::kPerspectivisation));
  m.bind("metanet", std::string(ns::kMetanet));
  m.bind("fred", std::string(ns::kFred));
  m.bind("ex", std::string(instance_base));
  return m;
}

/// A set of triples plus the prefix bindings used to print them. Terms are
/// always stored expanded. Equality compares triple sets only.
class Graph {
 public:
  using const_iterator = std::set<Triple>::const_iterator;

  Graph() = default;
  explicit Graph(PrefixMap prefixes) : prefixes_(std::move(prefixes)) {}

  /// Returns false when the triple was already present.
  bool insert(Triple t) {
    if (t.subject.is_literal()) throw std::invalid_argument("literal in subject position");
    if (!t.predicate.is_iri()) throw std::invalid_argument("predicate must be an IRI");
    return triples_.insert(std::move(t)).second;
  }
  bool insert(Term s, Term p, Term o) { return insert(Triple{std::move(s), std::move(p), std::move(o)}); }

  bool erase(const Triple& t) { return triples_.erase(t) != 0; }
  bool contains(const Triple& t) const { return triples_.count(t) != 0; }

  std::size_t size() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return triples_.empty(); }
  const_iterator begin() const noexcept { return triples_.begin(); }
  const_iterator end() const noexcept { return triples_.end(); }
  const std::set<Triple>& triples() const noexcept { return triples_; }

  const PrefixMap& prefixes() const noexcept { return prefixes_; }
  PrefixMap& prefixes() noexcept { return prefixes_; }

  bool operator==(const Graph& other) const { return triples_ == other.triples_; }

 private:
  std::set<Triple> triples_;
  PrefixMap prefixes_;
};

/// Triples matching the bound positions, in sorted order.
inline std::vector<Triple> match(const Graph& g, const std::optional<Term>& s,
                                 const std::optional<Term>& p, const std::optional<Term>& o) {
  std::vector<Triple> out;
  auto first = g.begin();
  // Sorted by subject first, so a bound subject narrows the scan.
  if (s) first = g.triples().lower_bound(Triple{*s, Term{}, Term{}});
  for (auto it = first; it != g.end(); ++it) {
    if (s && it->subject != *s) {
      if (it->subject > *s) break;
      continue;
    }
    if (p && it->predicate != *p) continue;
    if (o && it->object != *o) continue;
    out.push_back(*it);
  }
  return out;
}

/// Objects of (s, p, ?) in sorted order.
inline std::vector<Term> objects(const Graph& g, const Term& s, const Term& p) {
  std::vector<Term> out;
  for (const auto& t : match(g, s, p, std::nullopt)) out.push_back(t.object);
  return out;
}

/// Subjects of (?, p, o) in sorted order, deduplicated.
inline std::vector<Term> subjects(const Graph& g, const Term& p, const Term& o) {
  std::set<Term> out;
  for (const auto& t : match(g, std::nullopt, p, o)) out.insert(t.subject);
  return {out.begin(), out.end()};
}

/// Union of two graphs. Base prefixes win; a clashing extension prefix is
/// re-bound to a fresh name. Extension blank nodes are relabelled
/// `bmerge<N>` (skipping labels already used by the base) so they cannot
/// capture base nodes.
inline Graph merge(const Graph& base, const Graph& extension) {
  Graph out = base;

  for (const auto& [prefix, ns_iri] : extension.prefixes().entries()) {
    auto existing = out.prefixes().namespace_of(prefix);
    if (existing && *existing == ns_iri) continue;
    if (!existing) {
      out.prefixes().bind(prefix, ns_iri);
      continue;
    }
    if (out.prefixes().prefix_for(ns_iri)) continue;
    std::string stem = prefix.empty() ? "ns" : prefix;
    for (int i = 1;; ++i) {
      std::string fresh = stem + std::to_string(i);
      if (!out.prefixes().contains(fresh)) {
        out.prefixes().bind(fresh, ns_iri);
        break;
      }
    }
  }

  std::set<std::string> used;
  for (const auto& t : base) {
    if (t.subject.is_blank()) used.insert(t.subject.value());
    if (t.object.is_blank()) used.insert(t.object.value());
  }
  std::set<std::string> ext_labels;
  for (const auto& t : extension) {
    if (t.subject.is_blank()) ext_labels.insert(t.subject.value());
    if (t.object.is_blank()) ext_labels.insert(t.object.value());
  }
  std::map<std::string, std::string> rename;
  std::size_t counter = 0;
  for (const auto& label : ext_labels) {
    std::string fresh;
    do {
      fresh = "bmerge" + std::to_string(counter++);
    } while (used.count(fresh) || ext_labels.count(fresh));
    rename[label] = fresh;
  }
  auto relabel = [&](const Term& t) { return t.is_blank() ? Term::blank(rename.at(t.value())) : t; };
  for (const auto& t : extension) out.insert(relabel(t.subject), t.predicate, relabel(t.object));
  return out;
}

}  // namespace blendkg::rdf
