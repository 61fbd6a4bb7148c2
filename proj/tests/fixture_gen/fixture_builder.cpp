// Regenerates the synthetic datasets, frozen runs and replay cache under fixtures/.
//
//   fixture_builder <source-dir>
//
// Every model answer comes from an in-process stub; SKGs are seeded straight
// into the cache under a placeholder service URL.

#include <algorithm>
#include <array>
#include <cctype>
#include <iostream>
#include <map>
#include <mutex>
#include <random>

#include "blendkg/pipeline.hpp"
#include "stub_server.hpp"

using namespace blendkg;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kSkgUrl = "http://fred.example.invalid/stlab-tools/fred";
constexpr const char* kLlmUrl = "http://llm.example.invalid/v1";
constexpr const char* kModel = "fixture-model";
constexpr const char* kFetchedAt = "2026-01-05T09:00:00Z";
constexpr const char* kCrime = "Crime has infected communities everywhere";

struct Frame {
  std::string phrase;
  std::string domain;
};

struct Predicate {
  std::string phrase;
  std::string verb;
  std::string domain;
  std::string property;
};

const std::vector<Frame> kTargets = {
    {"the economy", "Economy"}, {"her anger", "Anger"},       {"the rumor", "Rumor"},     {"his argument", "Argument"},
    {"time", "Time"},           {"their love", "Love"},       {"the city", "City"},       {"the idea", "Idea"},
    {"the election", "Election"}, {"grief", "Grief"},         {"the company", "Company"}, {"inflation", "Inflation"},
    {"the debate", "Debate"},   {"hope", "Hope"},             {"the news", "News"},       {"fear", "Fear"},
    {"the market", "Market"},   {"memory", "Memory"},         {"the project", "Project"}, {"silence", "Silence"}};

const std::vector<Predicate> kSources = {
    {"boiled over", "boiled", "Liquid", "heat"},
    {"caught fire", "caught", "Fire", "spread"},
    {"wilted", "wilted", "Plant", "decline"},
    {"galloped ahead", "galloped", "Horse", "speed"},
    {"was swallowed whole", "swallowed", "Food", "internalization"},
    {"crumbled", "crumbled", "Building", "collapse"},
    {"sailed through", "sailed", "Ship", "navigation"},
    {"bled out", "bled", "Body", "loss"},
    {"froze", "froze", "Ice", "stillness"},
    {"blossomed", "blossomed", "Flower", "growth"},
    {"drowned", "drowned", "Water", "overwhelm"},
    {"roared", "roared", "Lion", "loudness"},
    {"limped along", "limped", "Injury", "impairment"},
    {"evaporated", "evaporated", "Vapor", "disappearance"},
    {"was poisoned", "poisoned", "Poison", "contamination"}};

const std::vector<Frame> kLiteralSubjects = {
    {"the cook", "Cook"},     {"the farmer", "Farmer"}, {"my neighbor", "Neighbor"}, {"the child", "Child"},
    {"the mechanic", "Mechanic"}, {"the nurse", "Nurse"}, {"the teacher", "Teacher"}, {"the sailor", "Sailor"},
    {"the student", "Student"}, {"the baker", "Baker"},  {"the driver", "Driver"},   {"my aunt", "Aunt"}};

const std::vector<Predicate> kLiteralPredicates = {
    {"boiled the water", "boiled", "Kitchen", ""},
    {"lit a fire in the stove", "lit", "Fire", ""},
    {"watered the plants", "watered", "Garden", ""},
    {"rode the horse", "rode", "Horse", ""},
    {"ate the sandwich", "ate", "Food", ""},
    {"repaired the wall", "repaired", "Building", ""},
    {"sailed the boat", "sailed", "Ship", ""},
    {"bandaged the wound", "bandaged", "Injury", ""},
    {"froze the leftovers", "froze", "Ice", ""},
    {"planted the flowers", "planted", "Flower", ""},
    {"swam in the lake", "swam", "Water", ""},
    {"fed the lion", "fed", "Lion", ""},
    {"walked to the store", "walked", "Street", ""},
    {"dried the laundry", "dried", "Laundry", ""},
    {"cleaned the kitchen", "cleaned", "Kitchen", ""}};

struct VisualPair {
  std::string name;
  std::string property;
};

const std::vector<VisualPair> kVisualSources = {{"gun", "dangerous"}, {"fruit", "fresh"},      {"bird", "light"},
                                                {"fire", "hot"},      {"ice", "cold"},         {"snake", "treacherous"},
                                                {"clock", "urgent"},  {"bomb", "explosive"},   {"heart", "loving"},
                                                {"rocket", "fast"}};
const std::vector<std::string> kVisualTargets = {"car key", "lightbulb", "shoe", "cigarette", "phone",
                                                 "bottle",  "coin",      "book", "pencil",    "chair"};

struct Item {
  std::string id;
  std::string sentence;
  std::string verb;
  bool metaphorical = true;
  std::string source, target, property;  // gold frames; for literals the frames a wrong blend would use
};

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string ident(const std::string& label) {
  std::string out;
  bool up = true;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += up ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
      up = false;
    } else {
      up = true;
    }
  }
  return out;
}

std::string pad(std::size_t n) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%03zu", n);
  return buf;
}

/// `n` distinct metaphorical sentences; stepping by 7 visits all 300 pairs.
std::vector<Item> metaphors(const std::string& prefix, std::size_t n, std::size_t offset) {
  std::vector<Item> out;
  std::size_t pairs = kTargets.size() * kSources.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t idx = (offset + 7 * k) % pairs;
    const auto& t = kTargets[idx % kTargets.size()];
    const auto& s = kSources[idx / kTargets.size()];
    out.push_back({prefix + pad(out.size() + 1), capitalize(t.phrase + " " + s.phrase) + ".", s.verb, true, s.domain,
                   t.domain, s.property});
  }
  return out;
}

std::vector<Item> literals(const std::string& prefix, std::size_t first_id, std::size_t n, std::size_t offset) {
  std::vector<Item> out;
  std::size_t pairs = kLiteralSubjects.size() * kLiteralPredicates.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t idx = (offset + 7 * k) % pairs;
    const auto& s = kLiteralSubjects[idx % kLiteralSubjects.size()];
    const auto& p = kLiteralPredicates[idx / kLiteralSubjects.size()];
    out.push_back({prefix + pad(first_id + k), capitalize(s.phrase + " " + p.phrase) + ".", p.verb, false, p.domain,
                   s.domain, "resemblance"});
  }
  return out;
}

// -- graphs ----------------------------------------------------------------------------

/// Small FRED-style graph naming each content word of `text`.
std::string skg_for(const std::string& text) {
  static const std::set<std::string> stop = {"the", "a", "an", "of", "to", "in", "on", "is", "as", "was", "has",
                                             "his", "her", "their", "my", "this", "with", "and", "its", "whose",
                                             "takes", "shape", "combined", "every", "each", "be"};
  std::vector<std::string> words;
  std::string w;
  for (char c : text + " ") {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!w.empty()) {
      if (!stop.count(w) && std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
      w.clear();
    }
  }
  std::string out =
      "@prefix fred: <http://www.ontologydesignpatterns.org/ont/fred/domain.owl#> .\n"
      "@prefix dul: <http://www.ontologydesignpatterns.org/ont/dul/DUL.owl#> .\n"
      "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n\n"
      "fred:situation_1 a dul:Situation";
  for (const auto& word : words) out += " ;\n    dul:isSettingFor fred:" + word + "_1";
  out += " .\n";
  for (const auto& word : words)
    out += "fred:" + word + "_1 a fred:" + capitalize(word) + " .\nfred:" + capitalize(word) + " rdfs:label \"" +
           word + "\" .\n";
  return out;
}

const char* kAnswerPrefixes =
    "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n"
    "@prefix ex: <http://example.org/> .\n"
    "@prefix bl: <http://www.ontologydesignpatterns.org/ont/blending/blending.owl#> .\n"
    "@prefix cp: <http://www.ontologydesignpatterns.org/ont/persp/perspectivisation.owl#> .\n"
    "@prefix metanet: <https://w3id.org/framester/metanet/schema/> .\n\n";

std::string fenced(const std::string& turtle) { return "```turtle\n" + turtle + "```\n"; }

std::string blend_answer(const std::string& source, const std::string& target, const std::string& property) {
  std::string s = ident(source), t = ident(target), p = ident(property);
  if (s == t) t += "Target";
  std::string blended = t + "As" + s;
  std::string g = kAnswerPrefixes;
  g += "ex:" + t + s + "Blend a bl:Blend ;\n    bl:blendingComponent ex:" + p + " ;\n    bl:blendableComponent ex:" +
       s + " , ex:" + t + " ;\n    bl:blendedComponent ex:" + blended + " ;\n    metanet:isMetaphorical true .\n\n";
  g += "ex:" + p + " a bl:Blending ;\n    rdfs:label \"" + capitalize(property) + "\" ;\n    bl:blendingComponent ex:" +
       p + "Bearer ;\n    bl:enablesBlending ex:" + blended + " .\n\n";
  for (const auto& [node, label, role] : {std::tuple{s, source, "source"}, std::tuple{t, target, "target"}}) {
    g += "ex:" + node + " a bl:Blendable ;\n    rdfs:label \"" + label + "\" ;\n    ex:hasBlendableRole \"" +
         role + "\" ;\n    bl:blendableComponent ex:" + node + "Core .\n";
    g += "ex:" + node + "Core bl:inheritsRoleFrom ex:" + p + "Bearer .\n\n";
  }
  g += "ex:" + blended + " a bl:Blended ;\n    rdfs:label \"" + target + " as " + source +
       "\" ;\n    bl:blendedComponent ex:" + blended + "Core .\n";
  g += "ex:" + blended + "Core bl:inheritsRoleFrom ex:" + s + "Core , ex:" + t + "Core .\n\n";
  g += "ex:" + p + "Lens a cp:Lens ;\n    rdfs:label \"" + property + "\" .\n";
  g += "ex:Emphasis a cp:Attitude ;\n    rdfs:label \"emphasis\" .\n";
  g += "ex:Speaker a cp:Conceptualiser .\n";
  return fenced(g);
}

std::string literal_answer() {
  return fenced(std::string(kAnswerPrefixes) + "ex:Utterance metanet:isMetaphorical false .\n");
}

// -- stub model --------------------------------------------------------------------------

/// Answers keyed by sentence (longest match in the last user turn) or by
/// the base64 of an attached image.
struct Oracle {
  std::mutex mu;
  std::map<std::string, std::string> by_sentence;
  std::map<std::string, std::string> by_image;
  std::map<std::string, std::string> captions;

  std::optional<std::string> answer(const std::string& body) {
    auto j = json::parse(body);
    const json* last = nullptr;
    for (const auto& m : j.at("messages"))
      if (m.at("role") == "user") last = &m;
    if (!last) return std::nullopt;
    std::string text;
    std::vector<std::string> images;
    const auto& content = last->at("content");
    if (content.is_string()) {
      text = content.get<std::string>();
    } else {
      for (const auto& part : content) {
        if (part.at("type") == "text") text += part.at("text").get<std::string>();
        if (part.at("type") == "image_url") {
          auto url = part.at("image_url").at("url").get<std::string>();
          images.push_back(url.substr(url.find(',') + 1));
        }
      }
    }
    std::lock_guard lock(mu);
    if (text.find("Describe this image") != std::string::npos) {
      for (const auto& img : images)
        if (auto it = captions.find(img); it != captions.end()) return it->second;
      return std::nullopt;
    }
    for (const auto& img : images)
      if (auto it = by_image.find(img); it != by_image.end()) return it->second;
    const std::string* best = nullptr;
    for (const auto& [sentence, reply] : by_sentence)
      if (text.find(sentence) != std::string::npos && (!best || sentence.size() > best->size())) best = &sentence;
    if (best) return by_sentence[*best];
    return std::nullopt;
  }
};

blendkg::testing::StubServer::Handler stub(Oracle& oracle) {
  return [&oracle](const httplib::Request& req, httplib::Response& res) {
    auto reply = oracle.answer(req.body);
    if (!reply) {
      res.status = 500;
      res.set_content("no scripted answer", "text/plain");
      return;
    }
    res.set_content(blendkg::testing::chat_body(*reply), "application/json");
  };
}

// -- writers -----------------------------------------------------------------------------

void write(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

fs::path temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("blendkg-" + tag + "-" + std::to_string(std::random_device{}()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void seed_skg(const fs::path& cache_dir, const std::string& text, const std::string& turtle) {
  skg::Cache cache(cache_dir / "skg");
  skg::SkgRequest req{text, kSkgUrl, skg::CachePolicy::CacheFirst};
  cache.put(req, {skg::cache_key(kSkgUrl, text), turtle, kFetchedAt});
}

json echo_config(const std::string& preset) {
  return {{"skg_url", kSkgUrl}, {"llm_base_url", kLlmUrl}, {"provider", "openai"}, {"model_id", kModel},
          {"preset", preset},   {"mode", "record"},         {"parallelism", 4},       {"seed", 0}};
}

struct Builder {
  fs::path root;  // fixtures/
  prompt::TemplateSet templates;
  Oracle oracle;
  blendkg::testing::StubServer server{stub(oracle)};

  explicit Builder(const fs::path& source)
      : root(source / "fixtures"), templates(prompt::TemplateSet::load(source / "templates")) {}

  /// Runs `instances` into `run_dir`, seeding SKGs from `skg_texts`.
  pipeline::RunSummary run(const fs::path& run_dir, const fs::path& cache_dir, const std::vector<eval::DatasetInstance>& instances,
                           prompt::TaskKind task, const std::string& preset, const std::string& dataset_id,
                           const std::string& format, const std::string& dataset_rel, const fs::path& image_root,
                           const std::vector<std::string>& skg_texts) {
    for (const auto& t : skg_texts) seed_skg(cache_dir, t, skg_for(t));
    skg::Client skg(cache_dir);
    llm::GatewayConfig gcfg;
    gcfg.base_url = server.url("/v1");
    gcfg.mode = llm::Mode::Record;
    gcfg.recordings = cache_dir / "llm" / "recordings.jsonl";
    llm::Gateway llm(gcfg);
    pipeline::Services services;
    services.skg = &skg;
    services.llm = &llm;
    services.templates = &templates;
    services.skg_url = kSkgUrl;
    services.cache_policy = skg::CachePolicy::CacheFirst;
    services.model_id = kModel;
    services.image_root = image_root;
    pipeline::RunOptions opts;
    opts.run_dir = run_dir;
    opts.dataset_id = dataset_id;
    opts.dataset_format = format;
    opts.dataset_path = dataset_rel;
    opts.parallelism = 4;
    opts.config = echo_config(preset);
    auto summary = pipeline::run_dataset(instances, task, prompt::preset(preset, templates), services, opts);
    if (summary.errors) throw std::runtime_error(run_dir.string() + ": " + std::to_string(summary.errors) + " errors");
    if (skg.network_calls()) throw std::runtime_error("SKG cache was not fully seeded for " + run_dir.string());
    return summary;
  }

  /// Frozen run for a report table; prompts are dropped to keep the fixture small.
  void table_run(const std::string& name, const std::vector<eval::DatasetInstance>& instances, prompt::TaskKind task,
                 const std::string& preset, const std::string& dataset_id, const std::string& format,
                 const std::string& dataset_file, const std::vector<std::string>& skg_texts) {
    auto dir = root / "runs" / name;
    fs::remove_all(dir);
    auto cache = temp_dir("fixture-cache");
    auto dataset_path = root / "datasets" / dataset_file;
    run(dir, cache, instances, task, preset, dataset_id, format, "../../datasets/" + dataset_file,
        dataset_path.parent_path(), skg_texts);
    fs::remove_all(dir / "prompts");
    fs::remove_all(cache);
    std::cout << "runs/" << name << ": " << instances.size() << " records\n";
  }
};

}  // namespace


namespace {

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_field(cells[i]);
  return out + "\n";
}

std::vector<std::string> sentences(const std::vector<Item>& items) {
  std::vector<std::string> out;
  for (const auto& i : items) out.push_back(i.sentence);
  return out;
}

/// Scripts the stub: every metaphor gets its blend, the first `false_positives`
/// literals get a spurious blend, the remaining literals a literal reading.
void script(Oracle& oracle, const std::vector<Item>& items, std::size_t false_positives) {
  std::lock_guard lock(oracle.mu);
  oracle.by_sentence.clear();
  std::size_t fp = 0;
  for (const auto& i : items) {
    bool blend = i.metaphorical || fp++ < false_positives;
    oracle.by_sentence[i.sentence] = blend ? blend_answer(i.source, i.target, i.property) : literal_answer();
  }
}

std::vector<Item> mixed(const std::string& prefix, std::size_t met, std::size_t lit, std::size_t offset) {
  auto items = metaphors(prefix, met, offset);
  auto lits = literals(prefix, met + 1, lit, offset);
  items.insert(items.end(), lits.begin(), lits.end());
  return items;
}

std::vector<eval::DatasetInstance> load(const fs::path& path, eval::Format f) { return eval::load_dataset(path, f).instances; }

void detection_set(Builder& b, const std::string& name, const std::string& format, std::size_t met, std::size_t lit,
                   std::size_t false_positives, std::size_t offset) {
  auto items = mixed(name + "-", met, lit, offset);
  std::string csv = csv_row({"id", "sentence", "target_word", "label"});
  for (const auto& i : items) csv += csv_row({i.id, i.sentence, i.verb, i.metaphorical ? "1" : "0"});
  write(b.root / "datasets" / (name + ".csv"), csv);
  script(b.oracle, items, false_positives);
  b.table_run(name + "_lag", load(b.root / "datasets" / (name + ".csv"), eval::parse_format(format)),
              prompt::TaskKind::Detection, "LAG", name, format, name + ".csv", sentences(items));
}

void bcmtd_set(Builder& b) {
  auto items = mixed("bcmtd-", 74, 67, 101);
  std::string csv = csv_row({"id", "sentence", "category", "label", "source", "target"});
  std::size_t k = 0;
  for (const auto& i : items) {
    if (i.metaphorical)
      csv += csv_row({i.id, i.sentence, k++ % 3 == 2 ? "scientific" : "genericconceptual", "1", i.source, i.target});
    else
      csv += csv_row({i.id, i.sentence, "literal", "0", "", ""});
  }
  write(b.root / "datasets" / "bcmtd.csv", csv);
  script(b.oracle, items, 28);
  b.table_run("bcmtd_lag", load(b.root / "datasets" / "bcmtd.csv", eval::Format::BCMTD), prompt::TaskKind::Detection,
              "LAG", "bcmtd", "bcmtd", "bcmtd.csv", sentences(items));
}

/// WG run plus three-annotator judgements of each predicted frame; both
/// frames are judged correct by majority for the first 32 instances.
void wg_set(Builder& b) {
  auto items = metaphors("wg-", 125, 13);
  std::string csv = csv_row({"id", "sentence", "source", "target"});
  for (const auto& i : items) csv += csv_row({i.id, i.sentence, i.source, i.target});
  write(b.root / "datasets" / "wg.csv", csv);

  std::string judgements = csv_row({"item_id", "annotator_id", "label"});
  {
    std::lock_guard lock(b.oracle.mu);
    b.oracle.by_sentence.clear();
    for (std::size_t n = 0; n < items.size(); ++n) {
      const auto& i = items[n];
      bool source_ok = n < 70, target_ok = n < 32 || (n >= 70 && n < 95);
      b.oracle.by_sentence[i.sentence] =
          blend_answer(source_ok ? i.source : "Object", target_ok ? i.target : "Situation", i.property);
      // Every third judgement has one dissenting annotator.
      auto votes = [&](bool ok, std::size_t salt) {
        std::array<bool, 3> v{ok, ok, ok};
        if ((n + salt) % 3 == 0) v[2] = !ok;
        return v;
      };
      for (const auto& [role, ok, salt] : {std::tuple{"source", source_ok, 0}, std::tuple{"target", target_ok, 1}}) {
        auto v = votes(ok, static_cast<std::size_t>(salt));
        for (std::size_t a = 0; a < 3; ++a)
          judgements += csv_row({i.id + "/" + role, "a" + std::to_string(a + 1), v[a] ? "1" : "0"});
      }
    }
  }
  b.table_run("wg_lag", load(b.root / "datasets" / "wg.csv", eval::Format::WG), prompt::TaskKind::ConceptualUnderstanding,
              "LAG", "wg", "wg", "wg.csv", sentences(items));
  write(b.root / "runs" / "wg_lag" / "judgements.csv", judgements);
}

struct VisualItem {
  std::string id, image, source, target, property, caption, sentence;
};

std::vector<VisualItem> visual_items() {
  std::vector<VisualItem> out;
  for (std::size_t n = 0; n < 100; ++n) {
    const auto& s = kVisualSources[n / 10];
    const auto& t = kVisualTargets[n % 10];
    out.push_back({"vis-" + pad(n + 1), "images/img_" + pad(n + 1) + ".png", s.name, t, s.property,
                   "A " + t + " combined with a " + s.name + ". The " + t + " takes the shape of the " + s.name + ".",
                   "This " + t + " is as " + s.property + " as a " + s.name + "."});
  }
  return out;
}

/// `positives` of the 300 judgements (100 images, 3 annotators) are "1".
std::string visual_annotations(const std::vector<VisualItem>& items, std::size_t positives, unsigned seed) {
  std::vector<std::size_t> order(items.size() * 3);
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::mt19937 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> label(order.size(), false);
  for (std::size_t k = 0; k < positives; ++k) label[order[k]] = true;
  std::string csv = csv_row({"item_id", "annotator_id", "label"});
  for (std::size_t k = 0; k < label.size(); ++k)
    csv += csv_row({items[k / 3].id, "a" + std::to_string(k % 3 + 1), label[k] ? "1" : "0"});
  return csv;
}

void visual_set(Builder& b) {
  auto items = visual_items();
  json manifest = json::array();
  std::vector<std::string> captions;
  {
    std::lock_guard lock(b.oracle.mu);
    for (const auto& i : items) {
      manifest.push_back({{"id", i.id},
                          {"image_path", i.image},
                          {"gold_source", i.source},
                          {"gold_target", i.target},
                          {"gold_property", i.property},
                          {"sentence", i.sentence}});
      auto b64 = base64_encode(read_file(b.root / "datasets" / "visual" / i.image));
      b.oracle.by_image[b64] = blend_answer(i.source, i.target, i.property);
      b.oracle.captions[b64] = i.caption;
      captions.push_back(i.caption);
    }
  }
  write(b.root / "datasets" / "visual" / "manifest.json", manifest.dump(2) + "\n");
  auto instances = load(b.root / "datasets" / "visual" / "manifest.json", eval::Format::Visual);
  struct Spec {
    const char* run;
    const char* preset;
    std::size_t positives;
  };
  unsigned seed = 11;
  for (const auto& s : {Spec{"visual_sentimg", "SentImg", 195}, Spec{"visual_nosent", "NoSent", 201},
                        Spec{"visual_fewshot", "VisualFewShot", 164}}) {
    b.table_run(s.run, instances, prompt::TaskKind::VisualUnderstanding, s.preset, "visual", "visual",
                "visual/manifest.json", captions);
    write(b.root / "runs" / s.run / "annotations.csv", visual_annotations(items, s.positives, seed++));
  }
}

/// Ten sentences with recorded SKGs and model answers, plus the caption and
/// answer for the first visual image.
void replay_set(Builder& b) {
  auto dir = b.root / "replay";
  fs::remove_all(dir);
  auto cache = dir / "cache";
  auto items = mixed("r", 5, 5, 42);
  items.front().sentence = kCrime;
  items.front().verb.clear();
  std::string csv = csv_row({"id", "sentence", "target_word", "label"});
  for (auto& i : items) {
    i.id = "crime10-" + pad(&i - items.data() + 1);
    csv += csv_row({i.id, i.sentence, i.verb, i.metaphorical ? "1" : "0"});
  }
  write(dir / "crime10.csv", csv);
  script(b.oracle, items, 1);
  {
    std::lock_guard lock(b.oracle.mu);
    b.oracle.by_sentence[kCrime] = fenced(read_file(b.root / "crime_answer.ttl"));
  }
  seed_skg(cache, kCrime, read_file(b.root / "crime_skg.ttl"));
  std::vector<std::string> texts;
  for (std::size_t k = 1; k < items.size(); ++k) texts.push_back(items[k].sentence);
  auto scratch = temp_dir("fixture-replay");
  b.run(scratch / "run", cache, load(dir / "crime10.csv", eval::Format::MohX), prompt::TaskKind::Detection, "LAG",
        "crime10", "mohx", (dir / "crime10.csv").string(), {}, texts);

  auto visual = load(b.root / "datasets" / "visual" / "manifest.json", eval::Format::Visual);
  visual.resize(1);
  b.run(scratch / "visual", cache, visual, prompt::TaskKind::VisualUnderstanding, "NoSent", "visual", "visual",
        "", b.root / "datasets" / "visual", {visual_items().front().caption});
  fs::remove_all(scratch);

  json cfg = {{"skg_url", kSkgUrl}, {"llm_base_url", kLlmUrl}, {"model_id", kModel},
              {"mode", "replay"},   {"cache_dir", "cache"}};
  write(dir / "config.json", cfg.dump(2) + "\n");
  std::cout << "replay: " << items.size() << " sentences + 1 image\n";
}

/// Tagged WG errors: 216 rows split 122/51/21/7/15 over the textual categories.
void error_tags(Builder& b) {
  const std::vector<std::pair<const char*, std::size_t>> counts = {{"WrongSubelementMapping", 122},
                                                                   {"TooSpecific", 51},
                                                                   {"TooGeneral", 21},
                                                                   {"SwitchedSourceTarget", 7},
                                                                   {"LiteralAsMetaphor", 15}};
  std::string csv = csv_row({"instance_id", "category"});
  std::size_t n = 0;
  for (const auto& [category, count] : counts)
    for (std::size_t k = 0; k < count; ++k) csv += csv_row({"wg-err-" + pad(++n), category});
  write(b.root / "errors" / "wg_error_tags.csv", csv);
}

void mutant(Builder& b) {
  auto g = rdf::parse_turtle(read_file(b.root / "crime_xkg.ttl"));
  rdf::Term blended = rdf::Term::iri("http://example.org/CrimeAsDisease");
  if (!g.erase({blended, ontology::vocab::rdf_type(), ontology::vocab::Blended()}))
    throw std::runtime_error("crime_xkg.ttl lacks the Blended typing triple");
  write(b.root / "crime_xkg_no_blended.ttl",
        "# crime_xkg.ttl without the bl:Blended typing of ex:CrimeAsDisease.\n" + rdf::serialize_turtle(g));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: fixture_builder <source-dir>\n";
    return 1;
  }
  try {
    Builder b(argv[1]);
    detection_set(b, "mohx", "mohx", 165, 135, 38, 0);
    detection_set(b, "trofi", "trofi", 200, 99, 46, 61);
    bcmtd_set(b);
    wg_set(b);
    visual_set(b);
    replay_set(b);
    error_tags(b);
    mutant(b);
  } catch (const std::exception& e) {
    std::cerr << "fixture_builder: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
