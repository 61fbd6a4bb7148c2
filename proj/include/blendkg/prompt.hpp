#pragma once

#include <algorithm>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blendkg/error.hpp"
#include "blendkg/io.hpp"
#include "blendkg/llm_gateway.hpp"
#include "blendkg/ontology.hpp"
#include "blendkg/turtle.hpp"

#ifndef BLENDKG_DEFAULT_TEMPLATES_DIR
#define BLENDKG_DEFAULT_TEMPLATES_DIR "templates"
#endif

namespace blendkg::prompt {

using json = nlohmann::json;

enum class TaskKind { Detection, ConceptualUnderstanding, VisualUnderstanding };

inline TaskKind parse_task(const std::string& s) {
  if (s == "detection") return TaskKind::Detection;
  if (s == "understanding") return TaskKind::ConceptualUnderstanding;
  if (s == "visual") return TaskKind::VisualUnderstanding;
  throw ConfigError("unknown task '" + s + "' (expected detection|understanding|visual)");
}

inline const char* to_string(TaskKind t) {
  switch (t) {
    case TaskKind::Detection: return "detection";
    case TaskKind::ConceptualUnderstanding: return "understanding";
    case TaskKind::VisualUnderstanding: return "visual";
  }
  return "detection";
}

/// A few-shot example. Text examples carry `input_text`; visual ones an
/// image plus its caption and annotation.
struct Example {
  std::string id;
  std::string input_text;
  std::string image;  // raw bytes
  std::string caption;
  std::optional<bool> metaphorical;
  std::string source;
  std::string target;
  std::string property;
};

struct PromptConfig {
  std::string preset;
  bool include_graph = true;
  bool include_blending = true;
  bool include_sentence = false;
  bool include_image = false;
  std::vector<Example> few_shot;
  std::optional<std::string> target_word;
  std::optional<int> baseline_shots;  // set for the plain few-shot baselines
};

inline constexpr std::string_view kDefaultVersion = "v1";

/// Every template of one version plus the shared example banks. Immutable
/// after loading.
class TemplateSet {
 public:
  static TemplateSet load(const std::filesystem::path& root = BLENDKG_DEFAULT_TEMPLATES_DIR,
                          const std::string& version = std::string(kDefaultVersion)) {
    TemplateSet t;
    t.version_ = version;
    auto dir = root / version;
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw ConfigError("no template directory " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& f : std::filesystem::directory_iterator(dir)) files.push_back(f.path());
    std::sort(files.begin(), files.end());
    std::string material;
    for (const auto& f : files) {
      auto body = read_file(f);
      material += f.filename().string() + '\0' + body + '\0';
      auto ext = f.extension().string();
      if (ext == ".txt") {
        while (!body.empty() && body.back() == '\n') body.pop_back();
        t.texts_[f.stem().string()] = body;
      } else {
        t.files_[f.filename().string()] = body;
      }
    }
    try {
      t.example_sentence_ = json::parse(t.file("example.json")).at("sentence").get<std::string>();
      auto bank = json::parse(read_file(root / "examples" / "fewshot_bank.json"));
      for (const auto& row : bank) {
        Example e;
        e.input_text = row.at("sentence").get<std::string>();
        e.metaphorical = row.at("metaphorical").get<bool>();
        e.source = row.value("source", "");
        e.target = row.value("target", "");
        t.bank_.push_back(e);
      }
      auto visual = json::parse(read_file(root / "examples" / "visual_examples.json"));
      for (const auto& row : visual) {
        Example e;
        e.id = row.at("id").get<std::string>();
        e.image = read_file(root / "examples" / row.at("image").get<std::string>());
        e.caption = row.at("caption").get<std::string>();
        e.metaphorical = true;
        e.source = row.at("source").get<std::string>();
        e.target = row.at("target").get<std::string>();
        e.property = row.at("property").get<std::string>();
        material += e.id + '\0' + sha256_hex(e.image) + '\0';
        t.visual_.push_back(e);
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed example bank: ") + e.what());
    }
    t.fingerprint_ = sha256_hex(material);
    return t;
  }

  const std::string& text(const std::string& name) const {
    auto it = texts_.find(name);
    if (it == texts_.end()) throw ConfigError("template " + version_ + "/" + name + ".txt is missing");
    return it->second;
  }

  const std::string& file(const std::string& name) const {
    auto it = files_.find(name);
    if (it == files_.end()) throw ConfigError("template file " + version_ + "/" + name + " is missing");
    return it->second;
  }

  const std::string& version() const { return version_; }
  /// Hash over every template byte of this version.
  const std::string& fingerprint() const { return fingerprint_; }
  const std::string& example_sentence() const { return example_sentence_; }
  const std::vector<Example>& fewshot_bank() const { return bank_; }
  const std::vector<Example>& visual_examples() const { return visual_; }

 private:
  std::string version_;
  std::string fingerprint_;
  std::map<std::string, std::string> texts_;
  std::map<std::string, std::string> files_;
  std::string example_sentence_;
  std::vector<Example> bank_;
  std::vector<Example> visual_;
};

/// Substitutes every `{{name}}` in `tmpl`.
inline std::string render(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = tmpl.find("{{", pos);
    if (open == std::string::npos) break;
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string::npos) throw ConfigError("unterminated placeholder in template");
    auto name = tmpl.substr(open + 2, close - open - 2);
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError("no value for placeholder {{" + name + "}}");
    out.append(tmpl, pos, open - pos);
    out += it->second;
    pos = close + 2;
  }
  out.append(tmpl, pos, std::string::npos);
  return out;
}

inline std::string join_sections(const std::vector<std::string>& sections) {
  std::string out;
  for (const auto& s : sections) {
    if (s.empty()) continue;
    if (!out.empty()) out += "\n\n";
    out += s;
  }
  return out;
}

inline std::vector<std::string> preset_names() {
  return {"LAG",      "NoBlending",       "NoGraph",       "SentImg",       "NoSent",
          "NoImg",    "VisualNoBlending", "VisualNoGraph", "VisualFewShot", "FewShot0",
          "FewShot3", "FewShot6",         "FewShot12"};
}

inline PromptConfig preset(const std::string& name, const TemplateSet& templates) {
  PromptConfig c;
  c.preset = name;
  auto visual = [&](bool graph, bool blending, bool sentence, bool image) {
    c.include_graph = graph;
    c.include_blending = blending;
    c.include_sentence = sentence;
    c.include_image = image;
    c.few_shot = templates.visual_examples();
  };
  if (name == "LAG") return c;
  if (name == "NoBlending") {
    c.include_blending = false;
  } else if (name == "NoGraph") {
    c.include_graph = false;
  } else if (name == "SentImg") {
    visual(true, true, true, true);
  } else if (name == "NoSent") {
    visual(true, true, false, true);
  } else if (name == "NoImg") {
    visual(true, true, true, false);
  } else if (name == "VisualNoBlending") {
    visual(true, false, false, true);
  } else if (name == "VisualNoGraph") {
    visual(false, true, false, true);
  } else if (name == "VisualFewShot") {
    visual(false, false, false, true);
  } else if (name.rfind("FewShot", 0) == 0) {
    int k = -1;
    try {
      k = std::stoi(name.substr(7));
    } catch (const std::exception&) {
    }
    if (k != 0 && k != 3 && k != 6 && k != 12) throw ConfigError("unknown preset '" + name + "'");
    c.include_graph = false;
    c.include_blending = false;
    c.baseline_shots = k;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

inline bool is_visual_preset(const PromptConfig& cfg) { return cfg.include_image || cfg.include_sentence; }

/// SKG rendered for a prompt: deterministic Turtle with only used prefixes.
inline std::string render_graph(const rdf::Graph& g) {
  auto text = rdf::serialize_turtle(rdf::prune_prefixes(g));
  while (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

/// Worked example graph. The blend triples are added only when the
/// blending instructions are part of the prompt.
inline std::string worked_example(const TemplateSet& templates, bool blending) {
  auto g = rdf::parse_turtle(templates.file("example_base.ttl"));
  if (blending) g = rdf::merge(g, rdf::parse_turtle(templates.file("example_blend.ttl")));
  return render_graph(g);
}

inline llm::ChatRequest build_text_prompt(const std::string& sentence, const std::optional<rdf::Graph>& skg,
                                          const PromptConfig& cfg, const TemplateSet& templates) {
  if (cfg.include_graph && !skg) throw ConfigError("preset " + cfg.preset + " needs an SKG");
  if (cfg.baseline_shots) throw ConfigError("preset " + cfg.preset + " is a few-shot baseline");
  std::vector<std::string> sections;
  sections.push_back(render(templates.text("task_text"), {{"sentence", sentence}}));
  if (cfg.include_blending) sections.push_back(templates.text("blending"));
  if (cfg.include_graph) sections.push_back(render(templates.text("graph"), {{"skg", render_graph(*skg)}}));
  if (cfg.target_word && !cfg.target_word->empty())
    sections.push_back(render(templates.text("target_word"), {{"target_word", *cfg.target_word}}));
  sections.push_back(render(templates.text("example"),
                            {{"example_sentence", templates.example_sentence()},
                             {"example_graph", worked_example(templates, cfg.include_blending)}}));
  sections.push_back(templates.text("contract"));
  if (cfg.include_blending) sections.push_back(templates.text("contract_blending"));
  llm::ChatRequest req;
  req.messages.push_back({llm::Role::User, join_sections(sections), {}});
  return req;
}

/// Turtle answer for an annotated visual example.
inline std::string visual_answer(const Example& e, bool blending) {
  using rdf::Term;
  namespace v = ontology::vocab;
  rdf::Graph g(rdf::default_prefixes());
  auto ex = [](const std::string& local) { return Term::iri(std::string(rdf::ns::kDefaultInstanceBase) + local); };
  auto label = [](const std::string& s) { return Term::literal(s, rdf::xsd("string")); };
  g.insert(ex("image"), v::isMetaphorical(), Term::boolean(true));
  if (blending) {
    g.insert(ex("Source"), v::rdf_type(), v::Blendable());
    g.insert(ex("Source"), v::hasBlendableRole(), label("source"));
    g.insert(ex("Target"), v::rdf_type(), v::Blendable());
    g.insert(ex("Target"), v::hasBlendableRole(), label("target"));
    g.insert(ex("Property"), v::rdf_type(), v::Blending());
    g.insert(ex("Property"), v::enablesBlending(), ex("Fusion"));
    g.insert(ex("Fusion"), v::rdf_type(), v::Blended());
    g.insert(ex("Fusion"), v::rdfs_label(), label(e.target + " as " + e.source));
  }
  g.insert(ex(blending ? "Source" : "source"), v::rdfs_label(), label(e.source));
  g.insert(ex(blending ? "Target" : "target"), v::rdfs_label(), label(e.target));
  g.insert(ex(blending ? "Property" : "property"), v::rdfs_label(), label(e.property));
  return "```turtle\n" + render_graph(g) + "\n```";
}

inline llm::ChatRequest build_visual_prompt(const std::optional<std::string>& image,
                                            const std::optional<std::string>& caption,
                                            const std::optional<rdf::Graph>& skg, const PromptConfig& cfg,
                                            const TemplateSet& templates) {
  if (!cfg.include_image && !cfg.include_sentence)
    throw ConfigError("visual preset " + cfg.preset + " enables neither image nor sentence");
  if (cfg.few_shot.size() != 3)
    throw ConfigError("visual prompts need exactly 3 examples, got " + std::to_string(cfg.few_shot.size()));
  if (cfg.include_image && !image) throw ConfigError("preset " + cfg.preset + " needs the image");
  if (cfg.include_sentence && !caption) throw ConfigError("preset " + cfg.preset + " needs the caption");
  if (cfg.include_graph && !skg) throw ConfigError("preset " + cfg.preset + " needs an SKG");

  llm::ChatRequest req;
  std::vector<std::string> intro{templates.text("task_visual")};
  if (cfg.include_blending) intro.push_back(templates.text("blending"));
  intro.push_back(templates.text("contract_visual"));
  if (cfg.include_blending) intro.push_back(templates.text("contract_blending"));
  req.messages.push_back({llm::Role::System, join_sections(intro), {}});

  auto channels = [&](const std::string& img, const std::string& cap, std::vector<std::string> sections) {
    llm::Message m{llm::Role::User, "", {}};
    if (cfg.include_image) m.images.push_back(img);
    if (cfg.include_sentence) sections.push_back(render(templates.text("caption_channel"), {{"caption", cap}}));
    m.text = join_sections(sections);
    return m;
  };
  for (std::size_t i = 0; i < cfg.few_shot.size(); ++i) {
    const auto& e = cfg.few_shot[i];
    req.messages.push_back(channels(e.image, e.caption, {"Example " + std::to_string(i + 1) + "."}));
    req.messages.push_back({llm::Role::Assistant, visual_answer(e, cfg.include_blending), {}});
  }
  std::vector<std::string> query{templates.text("visual_query")};
  auto m = channels(image.value_or(""), caption.value_or(""), query);
  if (cfg.include_graph) m.text = join_sections({m.text, render(templates.text("graph"), {{"skg", render_graph(*skg)}})});
  req.messages.push_back(m);
  return req;
}

inline llm::ChatRequest build_fewshot_baseline(const std::string& sentence, int k, const TemplateSet& templates) {
  if (k < 0) throw ConfigError("negative shot count");
  const auto& bank = templates.fewshot_bank();
  if (static_cast<std::size_t>(k) > bank.size())
    throw ConfigError("example bank has " + std::to_string(bank.size()) + " examples, " + std::to_string(k) +
                      " requested");
  std::vector<std::string> sections{templates.text("task_fewshot")};
  for (int i = 0; i < k; ++i)
    sections.push_back(render(templates.text("fewshot_example"),
                              {{"n", std::to_string(i + 1)},
                               {"sentence", bank[i].input_text},
                               {"label", *bank[i].metaphorical ? "true" : "false"}}));
  sections.push_back(render(templates.text("fewshot_query"), {{"sentence", sentence}}));
  sections.push_back(templates.text("contract"));
  llm::ChatRequest req;
  req.messages.push_back({llm::Role::User, join_sections(sections), {}});
  return req;
}

/// The fixed captioning instruction of this template version.
inline const std::string& caption_prompt(const TemplateSet& templates) { return templates.text("caption"); }

inline const std::string& repair_instruction(const TemplateSet& templates) { return templates.text("repair"); }

/// Row label used for a preset in reports.
inline std::string preset_label(const std::string& preset) {
  static const std::map<std::string, std::string> names = {
      {"LAG", "LAG"},           {"NoBlending", "No Blending"},
      {"NoGraph", "No Graph"},  {"SentImg", "LAG sent+img"},
      {"NoSent", "LAG no sent"}, {"NoImg", "LAG no img"},
      {"VisualNoBlending", "No Blending"}, {"VisualNoGraph", "No Graph"},
      {"VisualFewShot", "Few-Shot (3)"},   {"FewShot0", "Zero-shot"},
      {"FewShot3", "Few-Shot 3"},          {"FewShot6", "Few-Shot 6"},
      {"FewShot12", "Few-Shot 12"}};
  auto it = names.find(preset);
  return it == names.end() ? preset : it->second;
}

}  // namespace blendkg::prompt
