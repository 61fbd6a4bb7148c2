#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "blendkg/dataset.hpp"
#include "blendkg/error.hpp"
#include "blendkg/io.hpp"
#include "blendkg/llm_gateway.hpp"
#include "blendkg/ontology.hpp"
#include "blendkg/prompt.hpp"
#include "blendkg/skg_client.hpp"
#include "blendkg/turtle.hpp"

namespace blendkg::pipeline {

using json = nlohmann::json;
using eval::DatasetInstance;
using prompt::TaskKind;

inline constexpr int kRepairRetries = 2;

struct StageError {
  std::string stage;
  std::string code;
  std::string message;
};

struct PipelineRecord {
  std::string instance_id;
  TaskKind task = TaskKind::Detection;
  std::string preset;
  std::string template_version;
  std::optional<std::string> sentence;
  std::optional<std::string> image_ref;
  std::optional<std::string> caption;
  std::optional<rdf::Graph> skg;
  std::string prompt_hash;
  std::string raw_response;
  int llm_calls = 0;
  std::optional<rdf::Graph> xkg;
  ontology::ValidationReport validation;
  std::optional<ontology::MetaphoricityVerdict> verdict;
  std::optional<ontology::BlendStructure> blend;
  std::optional<StageError> error;
  std::map<std::string, double> timings_ms;

  /// First prompt sent to the model; not part of the serialized record.
  std::optional<llm::ChatRequest> request;

  bool completed() const { return verdict.has_value() != error.has_value(); }
};

/// Everything run_instance needs besides the instance itself.
struct Services {
  skg::Client* skg = nullptr;
  llm::Gateway* llm = nullptr;
  const prompt::TemplateSet* templates = nullptr;
  std::string skg_url;
  skg::CachePolicy cache_policy = skg::CachePolicy::CacheFirst;
  std::string model_id;
  std::filesystem::path image_root;
};

// -- serialization -------------------------------------------------------------

inline json term_json(const rdf::Term& t) { return rdf::format_term(t, rdf::PrefixMap{}); }

inline json to_json(const ontology::ValidationReport& r) {
  json findings = json::array();
  for (const auto& f : r.findings) {
    json jf = {{"code", f.code}, {"severity", ontology::to_string(f.severity)}, {"message", f.message}};
    if (f.node) jf["node"] = term_json(*f.node);
    findings.push_back(jf);
  }
  return {{"level", ontology::to_string(r.level)}, {"passed", r.passed}, {"findings", findings}};
}

inline ontology::ValidationReport report_from_json(const json& j) {
  ontology::ValidationReport r;
  r.level = j.value("level", "strict") == "strict" ? ontology::Level::Strict : ontology::Level::Lenient;
  r.passed = j.value("passed", false);
  for (const auto& jf : j.value("findings", json::array())) {
    ontology::Finding f;
    f.code = jf.at("code").get<std::string>();
    f.severity = jf.value("severity", "error") == "error" ? ontology::Severity::Error : ontology::Severity::Warning;
    f.message = jf.value("message", "");
    r.findings.push_back(f);
  }
  return r;
}

inline json to_json(const ontology::BlendStructure& b) {
  json blendables = json::array();
  for (const auto& f : b.blendables) {
    json roles = json::array();
    for (const auto& r : f.roles) {
      json jr = {{"node", term_json(r.node)}, {"label", r.label}};
      if (r.inherits_from) jr["inherits_from"] = term_json(*r.inherits_from);
      roles.push_back(jr);
    }
    json jf = {{"node", term_json(f.node)}, {"label", f.label}, {"roles", roles}};
    if (f.role_annotation) jf["role"] = *f.role_annotation;
    blendables.push_back(jf);
  }
  json j = {{"blending", {{"node", term_json(b.blending.node)}, {"label", b.blending.label}}},
            {"blendables", blendables},
            {"blended", {{"node", term_json(b.blended.node)}, {"label", b.blended.label}}}};
  if (b.blending_property) j["blending_property"] = *b.blending_property;
  if (b.lens) j["lens"] = b.lens->label;
  if (b.attitude) j["attitude"] = b.attitude->label;
  return j;
}

inline json to_json(const PipelineRecord& r) {
  json j = {{"instance_id", r.instance_id},
            {"task", prompt::to_string(r.task)},
            {"preset", r.preset},
            {"template_version", r.template_version},
            {"prompt_hash", r.prompt_hash},
            {"raw_response", r.raw_response},
            {"llm_calls", r.llm_calls},
            {"validation", to_json(r.validation)},
            {"timings_ms", r.timings_ms}};
  auto opt = [&](const char* key, const std::optional<std::string>& v) { j[key] = v ? json(*v) : json(nullptr); };
  opt("sentence", r.sentence);
  opt("image_ref", r.image_ref);
  opt("caption", r.caption);
  j["skg"] = r.skg ? json(rdf::serialize_turtle(*r.skg)) : json(nullptr);
  j["xkg"] = r.xkg ? json(rdf::serialize_turtle(*r.xkg)) : json(nullptr);
  if (r.verdict) {
    json v = {{"metaphorical", r.verdict->metaphorical}, {"evidence_node", term_json(r.verdict->evidence_node)}};
    auto vopt = [&](const char* key, const std::optional<std::string>& s) { v[key] = s ? json(*s) : json(nullptr); };
    vopt("source", r.verdict->source_label);
    vopt("target", r.verdict->target_label);
    vopt("property", r.verdict->property_label);
    j["verdict"] = v;
  } else {
    j["verdict"] = nullptr;
  }
  j["blend"] = r.blend ? to_json(*r.blend) : json(nullptr);
  j["error"] = r.error ? json{{"stage", r.error->stage}, {"code", r.error->code}, {"message", r.error->message}}
                       : json(nullptr);
  return j;
}

/// Inverse of to_json for everything evaluation needs. The blend is
/// re-extracted from the stored XKG.
inline PipelineRecord record_from_json(const json& j) {
  PipelineRecord r;
  r.instance_id = j.at("instance_id").get<std::string>();
  r.task = prompt::parse_task(j.value("task", "detection"));
  r.preset = j.value("preset", "");
  r.template_version = j.value("template_version", "");
  r.prompt_hash = j.value("prompt_hash", "");
  r.raw_response = j.value("raw_response", "");
  r.llm_calls = j.value("llm_calls", 0);
  auto opt = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<std::string>();
  };
  r.sentence = opt("sentence");
  r.image_ref = opt("image_ref");
  r.caption = opt("caption");
  if (auto s = opt("skg")) r.skg = rdf::parse_turtle(*s);
  if (auto s = opt("xkg")) r.xkg = rdf::parse_turtle(*s);
  if (j.contains("validation")) r.validation = report_from_json(j["validation"]);
  if (j.contains("verdict") && !j["verdict"].is_null()) {
    const auto& v = j["verdict"];
    ontology::MetaphoricityVerdict mv;
    mv.metaphorical = v.at("metaphorical").get<bool>();
    auto node = v.value("evidence_node", "");
    if (node.size() > 2 && node.front() == '<') mv.evidence_node = rdf::Term::iri(node.substr(1, node.size() - 2));
    else if (node.rfind("_:", 0) == 0) mv.evidence_node = rdf::Term::blank(node.substr(2));
    auto vopt = [&](const char* key) -> std::optional<std::string> {
      if (!v.contains(key) || v[key].is_null()) return std::nullopt;
      return v[key].get<std::string>();
    };
    mv.source_label = vopt("source");
    mv.target_label = vopt("target");
    mv.property_label = vopt("property");
    r.verdict = mv;
  }
  if (j.contains("error") && !j["error"].is_null()) {
    const auto& e = j["error"];
    r.error = StageError{e.value("stage", ""), e.value("code", ""), e.value("message", "")};
  }
  if (j.contains("timings_ms")) r.timings_ms = j["timings_ms"].get<std::map<std::string, double>>();
  if (r.xkg && r.verdict && r.verdict->metaphorical && r.validation.passed) {
    try {
      r.blend = ontology::extract_blend(*r.xkg);
    } catch (const Error&) {
    }
  }
  return r;
}

/// Serialized record without the timing block.
inline json comparable(const PipelineRecord& r) {
  auto j = to_json(r);
  j.erase("timings_ms");
  return j;
}

inline std::vector<PipelineRecord> load_records(const std::filesystem::path& file) {
  std::vector<PipelineRecord> out;
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(row, std::string("bad record: ") + e.what());
    }
  }
  return out;
}

// -- one instance ----------------------------------------------------------------

namespace detail {

class StageClock {
 public:
  explicit StageClock(std::map<std::string, double>& sink) : sink_(sink) {}
  template <class F>
  auto time(const std::string& stage, F&& f) {
    auto start = std::chrono::steady_clock::now();
    struct Guard {
      std::map<std::string, double>& sink;
      std::string stage;
      std::chrono::steady_clock::time_point start;
      ~Guard() {
        sink[stage] +=
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      }
    } guard{sink_, stage, start};
    return f();
  }

 private:
  std::map<std::string, double>& sink_;
};

struct StageFailure {
  std::string stage;
  std::string code;
  std::string message;
};

inline bool turtle_failure(const Error& e) {
  return e.code() == "NoTurtleFound" || e.code() == "SyntaxError" || e.code() == "UnknownPrefix";
}

}  // namespace detail

/// Default prefixes overlaid with the SKG's own bindings.
inline rdf::PrefixMap response_prefixes(const std::optional<rdf::Graph>& skg) {
  auto pm = rdf::default_prefixes();
  if (skg)
    for (const auto& [p, n] : skg->prefixes().entries()) pm.bind(p, n);
  return pm;
}

/// Runs every stage for one instance. Failures end up in `record.error`.
inline PipelineRecord run_instance(const DatasetInstance& instance, TaskKind task, const prompt::PromptConfig& cfg,
                                   const Services& services) {
  PipelineRecord rec;
  rec.instance_id = instance.id;
  rec.task = task;
  rec.preset = cfg.preset;
  rec.template_version = services.templates ? services.templates->version() : "";
  rec.sentence = instance.text;
  rec.image_ref = instance.image_ref;
  detail::StageClock clock(rec.timings_ms);
  std::string stage = "input";

  auto fail = [&](const std::string& code, const std::string& message) {
    rec.error = StageError{stage, code, message};
    rec.verdict.reset();
    rec.blend.reset();
    return rec;
  };

  try {
    if (!services.skg || !services.llm || !services.templates) throw ConfigError("pipeline services are not configured");
    const auto& templates = *services.templates;
    prompt::PromptConfig effective = cfg;
    if (instance.target_word && !effective.target_word) effective.target_word = instance.target_word;
    bool visual = task == TaskKind::VisualUnderstanding;

    std::optional<std::string> image;
    if (visual) {
      if (!instance.image_ref) throw ConfigError("visual instance " + instance.id + " has no image");
      auto path = services.image_root / *instance.image_ref;
      image = clock.time("input", [&] { return read_file(path); });
      if (image_mime_type(*image).empty()) throw ImageDecodeError(path.string() + " is neither PNG nor JPEG");
    } else if (!instance.text || instance.text->empty()) {
      throw ConfigError("text instance " + instance.id + " has no sentence");
    }

    std::optional<std::string> skg_text = instance.text;
    if (visual && !effective.baseline_shots && (effective.include_sentence || effective.include_graph)) {
      stage = "caption";
      rec.caption = clock.time("caption", [&] {
        return skg::caption_image(*image, *services.llm, services.model_id, prompt::caption_prompt(templates));
      });
      skg_text = rec.caption;
    }

    if (effective.include_graph && !effective.baseline_shots) {
      stage = "skg";
      rec.skg = clock.time("skg", [&] {
        return services.skg->fetch_skg({*skg_text, services.skg_url, services.cache_policy});
      });
    }

    stage = "prompt";
    llm::ChatRequest req = clock.time("prompt", [&] {
      if (effective.baseline_shots) return prompt::build_fewshot_baseline(*instance.text, *effective.baseline_shots, templates);
      if (visual) return prompt::build_visual_prompt(image, rec.caption, rec.skg, effective, templates);
      return prompt::build_text_prompt(*instance.text, rec.skg, effective, templates);
    });
    req.model_id = services.model_id;
    rec.prompt_hash = llm::request_key(req);
    rec.request = req;

    auto prefixes = response_prefixes(rec.skg);
    std::optional<rdf::Graph> answer;
    for (int attempt = 0; attempt <= kRepairRetries; ++attempt) {
      stage = "llm";
      auto resp = clock.time("llm", [&] { return services.llm->complete(req); });
      ++rec.llm_calls;
      rec.raw_response = resp.text;
      stage = "extract";
      try {
        answer = clock.time("extract", [&] {
          return rdf::parse_turtle(llm::extract_turtle_block(resp.text, prefixes), prefixes);
        });
        break;
      } catch (const Error& e) {
        if (!detail::turtle_failure(e) || attempt == kRepairRetries) throw;
        req.messages.push_back({llm::Role::Assistant, resp.text, {}});
        req.messages.push_back({llm::Role::User, prompt::repair_instruction(templates), {}});
      }
    }

    stage = "merge";
    rec.xkg = rec.skg ? rdf::merge(*rec.skg, *answer) : *answer;

    stage = "validate";
    rec.validation = clock.time("validate", [&] { return ontology::validate_xkg(*rec.xkg, ontology::Level::Strict); });

    stage = "verdict";
    rec.verdict = clock.time("verdict", [&] { return ontology::extract_verdict(*rec.xkg); });
    if (rec.verdict->metaphorical && rec.validation.passed) {
      stage = "blend";
      rec.blend = ontology::extract_blend(*rec.xkg);
    }
    return rec;
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail("Internal", e.what());
  }
}

// -- datasets ----------------------------------------------------------------------

struct RunOptions {
  std::filesystem::path run_dir;
  std::string dataset_id;
  std::string dataset_format;
  std::filesystem::path dataset_path;
  std::string label;  // row label in reports; defaults to the preset
  std::size_t parallelism = 1;
  std::uint64_t seed = 0;
  json config = json::object();  // resolved application config, echoed into the manifest
};

struct RunSummary {
  std::size_t processed = 0;
  std::size_t skipped = 0;
  std::size_t errors = 0;
};

/// Ids already present in a records file. A torn last line from an
/// interrupted run is dropped from the file.
inline std::set<std::string> recorded_ids(const std::filesystem::path& records) {
  std::set<std::string> ids;
  std::error_code ec;
  if (!std::filesystem::exists(records, ec)) return ids;
  auto text = read_file(records);
  std::string kept;
  std::size_t start = 0;
  bool torn = false;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    bool terminated = end != std::string::npos;
    std::string line = text.substr(start, terminated ? end - start : std::string::npos);
    start = terminated ? end + 1 : text.size();
    if (line.empty()) continue;
    try {
      auto j = json::parse(line);
      if (!terminated) throw json::parse_error::create(101, 0, "unterminated line", nullptr);
      ids.insert(j.at("instance_id").get<std::string>());
      kept += line + "\n";
    } catch (const json::exception&) {
      torn = true;
    }
  }
  if (torn) write_file_atomic(records, kept);
  return ids;
}

inline void write_prompt(const std::filesystem::path& dir, const PipelineRecord& rec) {
  if (!rec.request || rec.prompt_hash.empty()) return;
  auto path = dir / (rec.prompt_hash + ".json");
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) return;
  json messages = json::array();
  for (const auto& m : rec.request->messages) {
    json images = json::array();
    for (const auto& img : m.images) images.push_back(sha256_hex(img));
    messages.push_back({{"role", llm::to_string(m.role)}, {"text", m.text}, {"images", images}});
  }
  json j = {{"model_id", rec.request->model_id},
            {"temperature", rec.request->temperature},
            {"max_tokens", rec.request->max_tokens},
            {"messages", messages}};
  write_file_atomic(path, j.dump(2) + "\n");
}

/// Processes every instance not yet recorded in `opts.run_dir`, appending
/// records in instance order.
inline RunSummary run_dataset(const std::vector<DatasetInstance>& instances, TaskKind task,
                              const prompt::PromptConfig& cfg, const Services& services, const RunOptions& opts) {
  if (opts.parallelism < 1) throw ConfigError("parallelism must be at least 1");
  std::set<std::string> seen;
  for (const auto& i : instances)
    if (!seen.insert(i.id).second) throw ConfigError("duplicate instance id '" + i.id + "'");

  std::error_code ec;
  std::filesystem::create_directories(opts.run_dir / "prompts", ec);
  if (ec) throw IoError("cannot create run directory " + opts.run_dir.string());
  auto manifest_path = opts.run_dir / "manifest.json";
  auto records_path = opts.run_dir / "records.jsonl";

  json manifest;
  if (std::filesystem::exists(manifest_path, ec)) {
    manifest = json::parse(read_file(manifest_path));
    if (manifest.value("preset", "") != cfg.preset || manifest.value("task", "") != prompt::to_string(task))
      throw ConfigError("run directory " + opts.run_dir.string() + " belongs to a different preset or task");
  } else {
    json ids = json::array();
    for (const auto& i : instances) ids.push_back(i.id);
    manifest = {{"dataset_id", opts.dataset_id},
                {"dataset_format", opts.dataset_format},
                {"dataset_path", opts.dataset_path.string()},
                {"label", opts.label.empty() ? prompt::preset_label(cfg.preset) : opts.label},
                {"instance_ids", ids},
                {"task", prompt::to_string(task)},
                {"preset", cfg.preset},
                {"model_id", services.model_id},
                {"skg_service_url", services.skg_url},
                {"cache_mode", services.llm ? llm::to_string(services.llm->mode()) : "live"},
                {"seed", opts.seed},
                {"started_at", utc_timestamp()},
                {"template_version", services.templates ? services.templates->version() : ""},
                {"template_fingerprint", services.templates ? services.templates->fingerprint() : ""},
                {"repair_retries", kRepairRetries},
                {"parallelism", opts.parallelism},
                {"config", opts.config},
                {"record_count", 0},
                {"error_count", 0}};
  }

  auto done = recorded_ids(records_path);
  std::vector<const DatasetInstance*> pending;
  RunSummary summary;
  for (const auto& i : instances) {
    if (done.count(i.id))
      ++summary.skipped;
    else
      pending.push_back(&i);
  }

  std::vector<std::optional<PipelineRecord>> results(pending.size());
  std::mutex sink_mu;
  std::size_t next_to_write = 0;
  std::ofstream sink(records_path, std::ios::app | std::ios::binary);
  if (!sink) throw IoError("cannot open " + records_path.string());
  std::atomic<std::size_t> next_job{0};
  std::exception_ptr io_failure;

  auto flush_ready = [&] {
    while (next_to_write < results.size() && results[next_to_write]) {
      auto& rec = *results[next_to_write];
      sink << to_json(rec).dump() << "\n";
      if (!sink.flush()) throw IoError("cannot append to " + records_path.string());
      if (rec.error) ++summary.errors;
      ++summary.processed;
      results[next_to_write].reset();
      ++next_to_write;
    }
  };

  auto worker = [&] {
    while (true) {
      std::size_t job = next_job++;
      if (job >= pending.size()) return;
      auto rec = run_instance(*pending[job], task, cfg, services);
      try {
        write_prompt(opts.run_dir / "prompts", rec);
        std::lock_guard lock(sink_mu);
        if (io_failure) return;
        results[job] = std::move(rec);
        flush_ready();
      } catch (...) {
        std::lock_guard lock(sink_mu);
        if (!io_failure) io_failure = std::current_exception();
        next_job = pending.size();
        return;
      }
    }
  };

  std::size_t workers = std::min(opts.parallelism, std::max<std::size_t>(pending.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (io_failure) std::rethrow_exception(io_failure);

  manifest["record_count"] = done.size() + summary.processed;
  manifest["error_count"] = manifest.value("error_count", 0) + summary.errors;
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
  return summary;
}

}  // namespace blendkg::pipeline
