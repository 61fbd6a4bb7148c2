#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blendkg/error.hpp"
#include "blendkg/rdf.hpp"

namespace blendkg::ontology {

using rdf::Graph;
using rdf::Term;

/// Blending Ontology, Cognitive Perspectivisation and MetaNet terms.
namespace vocab {
inline Term bl(std::string_view local) { return Term::iri(std::string(rdf::ns::kBlending) + std::string(local)); }
inline Term cp(std::string_view local) {
  return Term::iri(std::string(rdf::ns::kPerspectivisation) + std::string(local));
}

inline Term Blend() { return bl("Blend"); }
inline Term Blendable() { return bl("Blendable"); }
inline Term Blended() { return bl("Blended"); }
inline Term Blending() { return bl("Blending"); }
inline Term blendableComponent() { return bl("blendableComponent"); }
inline Term blendedComponent() { return bl("blendedComponent"); }
inline Term blendingComponent() { return bl("blendingComponent"); }
inline Term enablesBlending() { return bl("enablesBlending"); }
inline Term inheritsRoleFrom() { return bl("inheritsRoleFrom"); }

inline Term Lens() { return cp("Lens"); }
inline Term Attitude() { return cp("Attitude"); }
inline Term Conceptualiser() { return cp("Conceptualiser"); }
inline Term Cut() { return cp("Cut"); }

inline Term isMetaphorical() { return Term::iri(std::string(rdf::ns::kMetanet) + "isMetaphorical"); }

inline Term rdf_type() { return Term::iri(std::string(rdf::ns::kRdf) + "type"); }
inline Term rdfs_label() { return Term::iri(std::string(rdf::ns::kRdfs) + "label"); }

/// Role marker the prompt asks the model to put on each Blendable.
inline constexpr std::string_view kBlendableRoleLocalName = "hasBlendableRole";
inline Term hasBlendableRole(std::string_view instance_base = rdf::ns::kDefaultInstanceBase) {
  return Term::iri(std::string(instance_base) + std::string(kBlendableRoleLocalName));
}

/// Every IRI the validator and extractor rely on.
inline std::vector<Term> all_terms() {
  return {Blend(), Blendable(), Blended(), Blending(), blendableComponent(), blendedComponent(),
          blendingComponent(), enablesBlending(), inheritsRoleFrom(), Lens(), Attitude(),
          Conceptualiser(), Cut(), isMetaphorical()};
}
}  // namespace vocab

// Stable finding codes.
namespace code {
inline constexpr const char* kNoVerdict = "NO_VERDICT";
inline constexpr const char* kMultipleVerdicts = "MULTIPLE_VERDICTS";
inline constexpr const char* kNonBooleanVerdict = "NON_BOOLEAN_VERDICT";
inline constexpr const char* kMissingBlending = "MISSING_BLENDING";
inline constexpr const char* kBlendableCount = "BLENDABLE_COUNT";
inline constexpr const char* kMissingBlended = "MISSING_BLENDED";
inline constexpr const char* kMissingLens = "MISSING_LENS";
inline constexpr const char* kMissingAttitude = "MISSING_ATTITUDE";
inline constexpr const char* kBlendableNotLinked = "BLENDABLE_NOT_LINKED";
inline constexpr const char* kBlendedNotEnabled = "BLENDED_NOT_ENABLED";
inline constexpr const char* kMissingBlend = "MISSING_BLEND";
inline constexpr const char* kUnlabeledBlendable = "BLENDABLE_UNLABELED";
inline constexpr const char* kNotMetaphorical = "NOT_METAPHORICAL";
}  // namespace code

enum class Level { Lenient, Strict };
enum class Severity { Error, Warning };

inline const char* to_string(Level l) { return l == Level::Strict ? "strict" : "lenient"; }
inline const char* to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

struct Finding {
  std::string code;
  Severity severity = Severity::Error;
  std::optional<Term> node;
  std::string message;
};

struct ValidationReport {
  Level level = Level::Lenient;
  bool passed = true;
  std::vector<Finding> findings;

  std::size_t error_count() const {
    return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(),
                                                  [](const Finding& f) { return f.severity == Severity::Error; }));
  }
  bool has(std::string_view c) const {
    return std::any_of(findings.begin(), findings.end(), [&](const Finding& f) { return f.code == c; });
  }
};

struct Role {
  Term node;
  std::string label;
  std::optional<Term> inherits_from;  ///< a role of the Blending space
};

struct Blendable {
  Term node;
  std::string label;
  std::optional<std::string> role_annotation;  ///< "source" / "target" marker, when present
  std::vector<Role> roles;
};

struct InheritedRole {
  Term role;
  Term from_frame;  ///< the Blendable (or Blending) owning the inherited role
};

struct Blended {
  Term node;
  std::string label;
  std::vector<InheritedRole> inherited_roles;
};

struct LabeledNode {
  Term node;
  std::string label;
};

struct BlendStructure {
  LabeledNode blending;
  std::vector<Blendable> blendables;  ///< exactly two; source first when annotated
  Blended blended;
  std::optional<LabeledNode> lens;
  std::optional<LabeledNode> attitude;
  std::optional<Term> conceptualiser;
  std::optional<std::string> blending_property;
  bool metaphorical = false;
};

struct MetaphoricityVerdict {
  bool metaphorical = false;
  Term evidence_node;
  std::optional<std::string> source_label;
  std::optional<std::string> target_label;
  std::optional<std::string> property_label;
};

// -- helpers -----------------------------------------------------------------

/// Interprets `true`, `"true"^^xsd:boolean`, `"1"^^xsd:boolean` and plain
/// `"true"` (any case) as booleans.
inline std::optional<bool> literal_as_bool(const Term& t) {
  if (!t.is_literal() || t.language()) return std::nullopt;
  std::string lex = t.value();
  const auto& dt = t.datatype();
  if (dt && *dt == rdf::xsd("boolean")) {
    if (lex == "true" || lex == "1") return true;
    if (lex == "false" || lex == "0") return false;
    return std::nullopt;
  }
  if (dt && *dt != rdf::xsd("string")) return std::nullopt;
  std::transform(lex.begin(), lex.end(), lex.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lex == "true") return true;
  if (lex == "false") return false;
  return std::nullopt;
}

inline std::string local_name(const std::string& iri_value) {
  auto cut = iri_value.find_last_of("#/");
  if (cut == std::string::npos) cut = iri_value.find_last_of(':');
  return cut == std::string::npos ? iri_value : iri_value.substr(cut + 1);
}

/// "CrimeAsDisease" -> "crime as disease", "crime_1" -> "crime 1".
inline std::string decamel(std::string_view name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    char c = name[i];
    if (c == '_' || c == '-') {
      if (!out.empty() && out.back() != ' ') out += ' ';
      continue;
    }
    bool upper = std::isupper(static_cast<unsigned char>(c)) != 0;
    if (upper && i > 0 && !out.empty() && out.back() != ' ') {
      char prev = name[i - 1];
      bool prev_lower = std::islower(static_cast<unsigned char>(prev)) || std::isdigit(static_cast<unsigned char>(prev));
      bool next_lower = i + 1 < name.size() && std::islower(static_cast<unsigned char>(name[i + 1]));
      if (prev_lower || (std::isupper(static_cast<unsigned char>(prev)) && next_lower)) out += ' ';
    }
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

/// rdfs:label (untagged or English preferred), else the de-camel-cased local
/// name. Blank nodes without a label yield "".
inline std::string label_of(const Graph& g, const Term& node) {
  std::optional<std::string> any;
  for (const auto& o : rdf::objects(g, node, vocab::rdfs_label())) {
    if (!o.is_literal()) continue;
    if (!o.language() || *o.language() == "en" || o.language()->rfind("en-", 0) == 0) return o.value();
    if (!any) any = o.value();
  }
  if (any) return *any;
  if (node.is_iri()) return decamel(local_name(node.value()));
  return {};
}

inline std::vector<Term> typed(const Graph& g, const Term& cls) { return rdf::subjects(g, vocab::rdf_type(), cls); }

/// Components reachable through any of the three component properties.
inline std::set<Term> components_of(const Graph& g, const Term& frame) {
  std::set<Term> out;
  for (const auto& p : {vocab::blendableComponent(), vocab::blendingComponent(), vocab::blendedComponent()})
    for (const auto& o : rdf::objects(g, frame, p)) out.insert(o);
  return out;
}

/// Role-level (a component inherits from a Blending component) or
/// frame-level (the Blendable itself inherits from the Blending) link.
inline bool linked_to_blending(const Graph& g, const Term& blendable, const std::vector<Term>& blendings) {
  const Term inherits = vocab::inheritsRoleFrom();
  for (const auto& blending : blendings) {
    if (g.contains({blendable, inherits, blending})) return true;
    auto generic_roles = components_of(g, blending);
    for (const auto& role : components_of(g, blendable))
      for (const auto& parent : rdf::objects(g, role, inherits))
        if (generic_roles.count(parent) || parent == blending) return true;
  }
  return false;
}

struct VerdictAssertion {
  Term subject;
  Term object;
  std::optional<bool> value;
};

inline std::vector<VerdictAssertion> verdict_assertions(const Graph& g) {
  std::vector<VerdictAssertion> out;
  for (const auto& t : rdf::match(g, std::nullopt, vocab::isMetaphorical(), std::nullopt))
    out.push_back({t.subject, t.object, literal_as_bool(t.object)});
  return out;
}

// -- operations ----------------------------------------------------------------

/// Lenient: exactly one boolean `metanet:isMetaphorical`. Strict adds the
/// blend-structure rules, applied only when the verdict is true. A rule that
/// depends on an absent anchor (e.g. linkage with no Blending) is not
/// reported separately.
inline ValidationReport validate_xkg(const Graph& g, Level level) {
  ValidationReport report;
  report.level = level;
  auto error = [&](const char* c, std::optional<Term> node, std::string msg) {
    report.findings.push_back({c, Severity::Error, std::move(node), std::move(msg)});
  };

  auto verdicts = verdict_assertions(g);
  std::optional<bool> value;
  if (verdicts.empty()) {
    error(code::kNoVerdict, std::nullopt, "no metanet:isMetaphorical assertion");
  } else if (verdicts.size() > 1) {
    error(code::kMultipleVerdicts, verdicts[1].subject,
          std::to_string(verdicts.size()) + " metanet:isMetaphorical assertions; exactly one is required");
  } else if (!verdicts[0].value) {
    error(code::kNonBooleanVerdict, verdicts[0].subject, "metanet:isMetaphorical value is not a boolean");
  } else {
    value = verdicts[0].value;
  }

  if (level == Level::Strict && value.value_or(false)) {
    auto blendings = typed(g, vocab::Blending());
    auto blendables = typed(g, vocab::Blendable());
    auto blendeds = typed(g, vocab::Blended());
    if (blendings.empty()) error(code::kMissingBlending, std::nullopt, "no node typed bl:Blending");
    if (blendables.size() != 2)
      error(code::kBlendableCount, std::nullopt,
            "expected exactly 2 nodes typed bl:Blendable, found " + std::to_string(blendables.size()));
    if (blendeds.empty()) error(code::kMissingBlended, std::nullopt, "no node typed bl:Blended");
    if (typed(g, vocab::Lens()).empty()) error(code::kMissingLens, std::nullopt, "no node typed cp:Lens");
    if (typed(g, vocab::Attitude()).empty())
      error(code::kMissingAttitude, std::nullopt, "no node typed cp:Attitude");
    if (!blendings.empty()) {
      for (const auto& b : blendables)
        if (!linked_to_blending(g, b, blendings))
          error(code::kBlendableNotLinked, b, "Blendable has no bl:inheritsRoleFrom path to a Blending");
      if (!blendeds.empty()) {
        bool enabled = false;
        for (const auto& bl : blendings)
          for (const auto& bd : blendeds)
            if (g.contains({bl, vocab::enablesBlending(), bd})) enabled = true;
        if (!enabled)
          error(code::kBlendedNotEnabled, blendeds.front(), "no bl:enablesBlending from a Blending to a Blended");
      }
    }
    if (typed(g, vocab::Blend()).empty())
      report.findings.push_back({code::kMissingBlend, Severity::Warning, std::nullopt, "no bl:Blend meta-node"});
  }

  report.passed = report.error_count() == 0;
  return report;
}

/// Reads the blend. Throws StructureError mirroring the first Strict error.
inline BlendStructure extract_blend(const Graph& g) {
  auto report = validate_xkg(g, Level::Strict);
  for (const auto& f : report.findings)
    if (f.severity == Severity::Error) throw StructureError(f.code, f.message);
  auto verdicts = verdict_assertions(g);
  if (!verdicts.front().value.value_or(false))
    throw StructureError(code::kNotMetaphorical, "graph asserts metanet:isMetaphorical false");

  const Term inherits = vocab::inheritsRoleFrom();
  BlendStructure b;
  b.metaphorical = true;

  auto blendeds = typed(g, vocab::Blended());
  auto blendings = typed(g, vocab::Blending());
  // Prefer the Blending that actually enables a Blended.
  Term blending_node = blendings.front();
  Term blended_node = blendeds.front();
  for (const auto& bl : blendings) {
    auto enabled = rdf::objects(g, bl, vocab::enablesBlending());
    auto hit = std::find_if(enabled.begin(), enabled.end(), [&](const Term& t) {
      return std::find(blendeds.begin(), blendeds.end(), t) != blendeds.end();
    });
    if (hit != enabled.end()) {
      blending_node = bl;
      blended_node = *hit;
      break;
    }
  }
  b.blending = {blending_node, label_of(g, blending_node)};
  if (!b.blending.label.empty()) b.blending_property = b.blending.label;
  auto generic_roles = components_of(g, blending_node);

  std::vector<std::pair<Term, std::set<Term>>> frame_roles;
  for (const auto& node : typed(g, vocab::Blendable())) {
    Blendable frame{node, label_of(g, node), std::nullopt, {}};
    if (frame.label.empty()) throw StructureError(code::kUnlabeledBlendable, "Blendable without a usable label");
    for (const auto& t : g) {
      if (t.subject == node && t.object.is_literal() &&
          local_name(t.predicate.value()) == vocab::kBlendableRoleLocalName) {
        std::string v = t.object.value();
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
        frame.role_annotation = v;
      }
    }
    auto roles = components_of(g, node);
    for (const auto& r : rdf::objects(g, node, vocab::blendableComponent())) {
      Role role{r, label_of(g, r), std::nullopt};
      for (const auto& parent : rdf::objects(g, r, inherits))
        if (generic_roles.count(parent)) {
          role.inherits_from = parent;
          break;
        }
      frame.roles.push_back(std::move(role));
    }
    frame_roles.emplace_back(node, std::move(roles));
    b.blendables.push_back(std::move(frame));
  }
  // Annotated source goes first; otherwise an annotated target goes second.
  auto rank = [](const Blendable& f) {
    if (f.role_annotation == "source") return 0;
    if (f.role_annotation == "target") return 2;
    return 1;
  };
  std::stable_sort(b.blendables.begin(), b.blendables.end(),
                   [&](const Blendable& x, const Blendable& y) { return rank(x) < rank(y); });

  b.blended.node = blended_node;
  b.blended.label = label_of(g, blended_node);
  for (const auto& r : rdf::objects(g, blended_node, vocab::blendedComponent())) {
    for (const auto& parent : rdf::objects(g, r, inherits)) {
      for (const auto& [frame, roles] : frame_roles)
        if (roles.count(parent)) b.blended.inherited_roles.push_back({r, frame});
      if (generic_roles.count(parent)) b.blended.inherited_roles.push_back({r, blending_node});
    }
  }

  if (auto lenses = typed(g, vocab::Lens()); !lenses.empty()) b.lens = LabeledNode{lenses.front(), label_of(g, lenses.front())};
  if (auto atts = typed(g, vocab::Attitude()); !atts.empty())
    b.attitude = LabeledNode{atts.front(), label_of(g, atts.front())};
  if (auto cs = typed(g, vocab::Conceptualiser()); !cs.empty()) b.conceptualiser = cs.front();
  return b;
}

/// (source, target) frame labels. Role annotations decide the order when
/// present; otherwise the extraction order is kept.
inline std::pair<std::string, std::string> source_target(const BlendStructure& b) {
  if (b.blendables.size() != 2) throw StructureError(code::kBlendableCount, "blend must have two Blendables");
  const Blendable* first = &b.blendables[0];
  const Blendable* second = &b.blendables[1];
  if (first->role_annotation == "target" || second->role_annotation == "source") std::swap(first, second);
  if (first->label.empty() || second->label.empty()) throw MissingLabels("a Blendable lacks a frame label");
  return {first->label, second->label};
}

/// The boolean carried by `metanet:isMetaphorical`, plus source/target/property
/// labels when a well-formed blend is present.
inline MetaphoricityVerdict extract_verdict(const Graph& g) {
  auto assertions = verdict_assertions(g);
  std::vector<VerdictAssertion> usable;
  for (const auto& a : assertions)
    if (a.value) usable.push_back(a);
  if (usable.empty()) throw NoVerdict("no boolean metanet:isMetaphorical assertion");
  for (const auto& a : usable)
    if (*a.value != *usable.front().value) throw AmbiguousVerdict("conflicting metanet:isMetaphorical values");

  MetaphoricityVerdict v;
  v.metaphorical = *usable.front().value;
  v.evidence_node = usable.front().subject;
  if (v.metaphorical) {
    try {
      auto blend = extract_blend(g);
      auto [source, target] = source_target(blend);
      v.source_label = source;
      v.target_label = target;
      v.property_label = blend.blending_property;
    } catch (const Error&) {
      // labels stay absent for graphs without a complete blend
    }
  }
  return v;
}

/// Vocabulary IRIs that a user-supplied ontology never mentions as a subject.
inline std::vector<Term> undeclared_terms(const Graph& ontology_graph) {
  std::vector<Term> missing;
  for (const auto& t : vocab::all_terms())
    if (rdf::match(ontology_graph, t, std::nullopt, std::nullopt).empty()) missing.push_back(t);
  return missing;
}

}  // namespace blendkg::ontology
