// blendkg: metaphor detection and understanding over blended knowledge graphs.

#include <CLI11.hpp>

#include <iostream>
#include <memory>

#include "blendkg/config.hpp"
#include "blendkg/dataset.hpp"
#include "blendkg/metrics.hpp"
#include "blendkg/pipeline.hpp"
#include "blendkg/report.hpp"

namespace fs = std::filesystem;
using namespace blendkg;
using blendkg::prompt::TaskKind;

namespace {

constexpr int kUsage = 1;
constexpr int kFailure = 2;

struct Flags {
  std::string config;
  std::string skg_url, llm_url, provider, model, cache_dir, templates, template_version, mode, preset;
  std::size_t parallelism = 0;
  double rpm = -1;
};

AppConfig resolve(const Flags& f) {
  AppConfig c;
  if (!f.config.empty()) c.merge_file(f.config);
  c.merge_env();
  if (!f.skg_url.empty()) c.skg_url = f.skg_url;
  if (!f.llm_url.empty()) c.llm_base_url = f.llm_url;
  if (!f.provider.empty()) c.provider = f.provider;
  if (!f.model.empty()) c.model_id = f.model;
  if (!f.cache_dir.empty()) c.cache_dir = f.cache_dir;
  if (!f.templates.empty()) c.templates_dir = f.templates;
  if (!f.template_version.empty()) c.template_version = f.template_version;
  if (!f.mode.empty()) c.mode = llm::parse_mode(f.mode);
  if (!f.preset.empty()) c.preset = f.preset;
  if (f.parallelism) c.parallelism = f.parallelism;
  if (f.rpm >= 0) c.requests_per_minute = f.rpm;
  return c;
}

/// Thrown for bad invocations detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Runtime {
  AppConfig cfg;
  prompt::TemplateSet templates;
  prompt::PromptConfig prompt_cfg;
  std::unique_ptr<skg::Client> skg;
  std::unique_ptr<llm::Gateway> llm;
  pipeline::Services services;
};

std::unique_ptr<Runtime> make_runtime(const AppConfig& cfg, const std::string& preset, TaskKind task) {
  auto rt = std::make_unique<Runtime>();
  rt->cfg = cfg;
  rt->templates = prompt::TemplateSet::load(cfg.templates_dir, cfg.template_version);
  rt->prompt_cfg = prompt::preset(preset, rt->templates);
  bool visual_preset = prompt::is_visual_preset(rt->prompt_cfg);
  if (visual_preset != (task == TaskKind::VisualUnderstanding))
    throw UsageError("preset " + preset + " does not fit the " + prompt::to_string(task) + " task");
  if (rt->prompt_cfg.include_graph && !rt->prompt_cfg.baseline_shots && cfg.skg_url.empty())
    throw UsageError("--skg-url is required for preset " + preset);
  if (cfg.mode != llm::Mode::Replay && cfg.llm_base_url.empty())
    throw UsageError("--llm-url (or LLM_BASE_URL) is required in " + std::string(llm::to_string(cfg.mode)) + " mode");
  if (cfg.model_id.empty()) throw UsageError("--model is required");
  rt->skg = std::make_unique<skg::Client>(cfg.cache_dir);
  rt->llm = std::make_unique<llm::Gateway>(cfg.gateway());
  rt->services.skg = rt->skg.get();
  rt->services.llm = rt->llm.get();
  rt->services.templates = &rt->templates;
  rt->services.skg_url = cfg.skg_url;
  rt->services.cache_policy = cfg.skg_policy();
  rt->services.model_id = cfg.model_id;
  return rt;
}

/// Writes the XKG next to the cache and returns its path.
fs::path store_xkg(const AppConfig& cfg, const pipeline::PipelineRecord& rec, const std::string& out) {
  fs::path path = out.empty() ? cfg.cache_dir / "xkg" / (rec.prompt_hash + ".ttl") : fs::path(out);
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  write_file_atomic(path, rdf::serialize_turtle(*rec.xkg));
  return path;
}

int print_record(const AppConfig& cfg, const pipeline::PipelineRecord& rec, const std::string& out) {
  if (rec.error) {
    std::cout << "error: stage=" << rec.error->stage << " code=" << rec.error->code << "\n";
    std::cerr << rec.error->message << "\n";
    return kFailure;
  }
  const auto& v = *rec.verdict;
  std::cout << "metaphorical: " << (v.metaphorical ? "true" : "false") << "\n";
  if (v.metaphorical) {
    if (v.source_label) std::cout << "source: " << *v.source_label << "\n";
    if (v.target_label) std::cout << "target: " << *v.target_label << "\n";
    if (v.property_label) std::cout << "property: " << *v.property_label << "\n";
  }
  std::cout << "valid: " << (rec.validation.passed ? "true" : "false") << "\n";
  if (rec.caption) std::cout << "caption: " << *rec.caption << "\n";
  std::cout << "xkg: " << store_xkg(cfg, rec, out).string() << "\n";
  return 0;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--skg-url", f.skg_url, "SKG service endpoint");
  cmd->add_option("--llm-url", f.llm_url, "LLM API base URL (or LLM_BASE_URL); the key comes from LLM_API_KEY");
  cmd->add_option("--provider", f.provider, "LLM wire format: openai|anthropic");
  cmd->add_option("--model", f.model, "LLM model id");
  cmd->add_option("--cache-dir", f.cache_dir, "SKG cache and LLM recordings root");
  cmd->add_option("--templates", f.templates, "prompt templates root");
  cmd->add_option("--template-version", f.template_version, "template set version");
  cmd->add_option("--mode", f.mode, "live|record|replay");
  cmd->add_option("--preset", f.preset, "prompt preset");
  cmd->add_option("--rpm", f.rpm, "LLM requests per minute (0 = unlimited)");
}

std::string join_findings(const ontology::ValidationReport& r) {
  std::string out;
  for (const auto& f : r.findings)
    out += std::string(f.severity == ontology::Severity::Error ? "ERROR " : "WARNING ") + f.code + ": " + f.message +
           "\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metaphor detection and understanding with blended knowledge graphs"};
  app.require_subcommand(1);
  Flags flags;

  // detect
  auto* detect = app.add_subcommand("detect", "Detect and explain a metaphor in one sentence");
  std::string sentence, target_word, out;
  detect->add_option("sentence", sentence, "input sentence")->required();
  detect->add_option("--target-word", target_word, "word under focus");
  detect->add_option("--out", out, "where to write the XKG");
  add_common(detect, flags);

  // visual
  auto* visual = app.add_subcommand("visual", "Explain a visual metaphor");
  std::string image;
  visual->add_option("image", image, "PNG or JPEG file")->required()->check(CLI::ExistingFile);
  visual->add_option("--out", out, "where to write the XKG");
  add_common(visual, flags);

  // run
  auto* run = app.add_subcommand("run", "Run the pipeline over a dataset");
  std::string dataset, format, run_dir, task_name = "detection", label;
  std::size_t sample = 0;
  std::uint64_t seed = 0;
  run->add_option("--dataset", dataset, "dataset file")->required()->check(CLI::ExistingFile);
  run->add_option("--format", format, "mohx|trofi|wg|bcmtd|visual")->required();
  run->add_option("--task", task_name, "detection|understanding|visual");
  run->add_option("--out", run_dir, "run directory")->required();
  run->add_option("--sample", sample, "balanced sample size (0 = all)");
  run->add_option("--seed", seed, "sampling seed");
  run->add_option("--label", label, "row label in reports");
  run->add_option("--parallelism", flags.parallelism, "worker count");
  add_common(run, flags);

  // eval
  auto* ev = app.add_subcommand("eval", "Score a run against its gold data");
  std::string eval_run, eval_dataset, scorer_spec = "exact";
  ev->add_option("--run", eval_run, "run directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--dataset", eval_dataset, "gold file (defaults to the run's dataset)")->check(CLI::ExistingFile);
  ev->add_option("--scorer", scorer_spec, "exact | http:<url> | annotations:<csv>");

  // validate
  auto* validate = app.add_subcommand("validate", "Check a Turtle file against the blending ontology");
  std::string ttl;
  bool strict = false;
  validate->add_option("file", ttl, "Turtle file")->required()->check(CLI::ExistingFile);
  validate->add_flag("--strict", strict, "apply the strict rule set");

  // report
  auto* rep = app.add_subcommand("report", "Render result tables from runs");
  std::vector<int> tables;
  std::vector<std::string> runs;
  bool csv = false;
  std::string report_out;
  rep->add_option("--table", tables, "table number (2-7), repeatable")->required()->check(CLI::Range(2, 7));
  rep->add_option("--run", runs, "run directory, repeatable")->required()->check(CLI::ExistingDirectory);
  rep->add_flag("--csv", csv, "print CSV instead of text");
  rep->add_option("--out", report_out, "also write report.txt and report.csv here");

  // cache
  auto* cache = app.add_subcommand("cache", "Inspect or prune the SKG cache");
  std::string cache_action;
  cache->add_option("action", cache_action, "list|prune")->required()->check(CLI::IsMember({"list", "prune"}));
  add_common(cache, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*detect || *visual) {
      auto cfg = resolve(flags);
      bool is_visual = visual->parsed();
      std::string preset = flags.preset.empty() ? (is_visual ? "NoSent" : cfg.preset) : flags.preset;
      auto task = is_visual ? TaskKind::VisualUnderstanding : TaskKind::Detection;
      auto rt = make_runtime(cfg, preset, task);
      eval::DatasetInstance inst;
      inst.id = "cli";
      if (is_visual) {
        inst.modality = eval::Modality::Image;
        inst.image_ref = fs::absolute(image).string();
      } else {
        inst.text = sentence;
        if (!target_word.empty()) inst.target_word = target_word;
      }
      auto rec = pipeline::run_instance(inst, task, rt->prompt_cfg, rt->services);
      return print_record(cfg, rec, out);
    }

    if (*run) {
      auto cfg = resolve(flags);
      auto task = prompt::parse_task(task_name);
      auto fmt = eval::parse_format(format);
      auto ds = eval::load_dataset(dataset, fmt);
      auto items = sample ? eval::balanced_sample(ds.instances, sample, seed) : ds.instances;
      auto rt = make_runtime(cfg, cfg.preset, task);
      rt->services.image_root = ds.base_dir;
      pipeline::RunOptions o;
      o.run_dir = run_dir;
      o.dataset_id = fs::path(dataset).stem().string();
      o.dataset_format = format;
      o.dataset_path = fs::absolute(dataset);
      o.label = label;
      o.parallelism = cfg.parallelism;
      o.seed = seed;
      o.config = cfg.to_json();
      auto s = pipeline::run_dataset(items, task, rt->prompt_cfg, rt->services, o);
      std::cout << "processed: " << s.processed << "\nskipped: " << s.skipped << "\nerrors: " << s.errors << "\n";
      return 0;
    }

    if (*ev) {
      auto manifest = report::load_manifest(eval_run);
      if (!eval_dataset.empty()) manifest["dataset_path"] = fs::absolute(eval_dataset).string();
      auto gold = report::run_gold(eval_run, manifest);
      auto records = pipeline::load_records(fs::path(eval_run) / "records.jsonl");
      auto task = prompt::parse_task(manifest.value("task", "detection"));
      std::size_t errors = 0;
      for (const auto& r : records) errors += r.error ? 1 : 0;
      std::cout << "instances: " << gold.size() << "\nerror_records: " << errors << "\n";
      if (task == TaskKind::Detection && manifest.value("dataset_format", "") != "wg") {
        auto s = eval::score_detection(records, gold);
        std::cout << "accuracy: " << report::percent(s.accuracy) << "\nf1: " << report::percent(s.f1)
                  << "\ntp: " << s.confusion.tp << "\nfp: " << s.confusion.fp << "\ntn: " << s.confusion.tn
                  << "\nfn: " << s.confusion.fn << "\n";
      } else {
        eval::Scorer scorer;
        if (scorer_spec == "exact") scorer = eval::exact_scorer();
        else if (scorer_spec.rfind("http:", 0) == 0) scorer = eval::http_scorer(scorer_spec.substr(5));
        else if (scorer_spec.rfind("annotations:", 0) == 0)
          scorer = eval::annotation_scorer(eval::load_annotations(scorer_spec.substr(12)));
        else throw UsageError("unknown scorer '" + scorer_spec + "'");
        auto s = eval::score_understanding(records, gold, scorer);
        std::cout << "evaluated: " << s.evaluated << "\nsuccesses: " << s.successes
                  << "\nsuccess_rate: " << report::percent(s.success_rate) << "\n";
      }
      if (fs::exists(fs::path(eval_run) / "annotations.csv")) {
        auto m = eval::load_annotations(fs::path(eval_run) / "annotations.csv");
        std::cout << "annotated_accuracy: " << report::percent(eval::label_rate(m, "1")) << "\n";
      }
      return 0;
    }

    if (*validate) {
      auto g = rdf::parse_turtle(read_file(ttl));
      auto r = ontology::validate_xkg(g, strict ? ontology::Level::Strict : ontology::Level::Lenient);
      std::cout << join_findings(r) << (r.passed ? "PASS" : "FAIL") << "\n";
      return r.passed ? 0 : kFailure;
    }

    if (*rep) {
      std::vector<report::RunResult> results;
      for (const auto& r : runs) results.push_back(report::evaluate_run(r));
      std::vector<report::Table> out_tables;
      for (int t : tables) out_tables.push_back(report::table(t, results));
      auto text = report::render_text(out_tables);
      auto csv_text = report::render_csv(out_tables);
      std::cout << (csv ? csv_text : text);
      if (!report_out.empty()) {
        fs::create_directories(report_out);
        write_file_atomic(fs::path(report_out) / "report.txt", text);
        write_file_atomic(fs::path(report_out) / "report.csv", csv_text);
      }
      return 0;
    }

    if (*cache) {
      auto cfg = resolve(flags);
      skg::Client client(cfg.cache_dir);
      if (cache_action == "prune") {
        std::cout << "removed: " << client.cache().prune() << "\n";
      } else {
        auto entries = client.cache().entries();
        for (auto& [key, row] : entries.items())
          std::cout << key << "\t" << row.value("fetched_at", "") << "\t" << row.value("text", "") << "\n";
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << e.code() << ": " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return 0;
}
