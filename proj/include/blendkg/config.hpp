#pragma once

#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

#include "blendkg/error.hpp"
#include "blendkg/io.hpp"
#include "blendkg/llm_gateway.hpp"
#include "blendkg/prompt.hpp"
#include "blendkg/skg_client.hpp"

namespace blendkg {

#ifndef BLENDKG_DEFAULT_TEMPLATES_DIR
#define BLENDKG_DEFAULT_TEMPLATES_DIR "templates"
#endif

/// Resolved application settings. Precedence: flags > environment >
/// config file > defaults.
struct AppConfig {
  std::string skg_url;
  std::string llm_base_url;
  std::string provider = "openai";
  std::string model_id;
  std::filesystem::path cache_dir = ".blendkg-cache";
  std::filesystem::path templates_dir = BLENDKG_DEFAULT_TEMPLATES_DIR;
  std::string template_version{prompt::kDefaultVersion};
  std::string preset = "LAG";
  std::size_t parallelism = 1;
  llm::Mode mode = llm::Mode::Live;
  double requests_per_minute = 0;
  std::uint64_t seed = 0;
  std::string api_key;  // never echoed

  /// Relative paths in the file resolve against the file's directory.
  void merge_file(const std::filesystem::path& file) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(file));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad config file " + file.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file " + file.string() + " must hold a JSON object");
    auto base = file.parent_path();
    auto path = [&](const std::filesystem::path& p) { return p.is_relative() ? base / p : p; };
    try {
      for (auto& [key, v] : j.items()) {
        if (key == "skg_url") skg_url = v.get<std::string>();
        else if (key == "llm_base_url") llm_base_url = v.get<std::string>();
        else if (key == "provider") provider = v.get<std::string>();
        else if (key == "model_id") model_id = v.get<std::string>();
        else if (key == "cache_dir") cache_dir = path(v.get<std::string>());
        else if (key == "templates_dir") templates_dir = path(v.get<std::string>());
        else if (key == "template_version") template_version = v.get<std::string>();
        else if (key == "preset") preset = v.get<std::string>();
        else if (key == "parallelism") parallelism = v.get<std::size_t>();
        else if (key == "mode") mode = llm::parse_mode(v.get<std::string>());
        else if (key == "requests_per_minute") requests_per_minute = v.get<double>();
        else if (key == "seed") seed = v.get<std::uint64_t>();
        else throw ConfigError("unknown config key '" + key + "' in " + file.string());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad value in " + file.string() + ": " + e.what());
    }
  }

  void merge_env() {
    if (const char* v = std::getenv("LLM_API_KEY"); v && *v) api_key = v;
    if (const char* v = std::getenv("LLM_BASE_URL"); v && *v) llm_base_url = v;
    if (const char* v = std::getenv("SKG_URL"); v && *v) skg_url = v;
  }

  skg::CachePolicy skg_policy() const {
    switch (mode) {
      case llm::Mode::Live: return skg::CachePolicy::Live;
      case llm::Mode::Record: return skg::CachePolicy::CacheFirst;
      case llm::Mode::Replay: return skg::CachePolicy::ReplayOnly;
    }
    return skg::CachePolicy::Live;
  }

  std::filesystem::path recordings() const { return cache_dir / "llm" / "recordings.jsonl"; }

  llm::GatewayConfig gateway() const {
    llm::GatewayConfig g;
    g.base_url = llm_base_url;
    g.provider = provider;
    g.api_key = api_key;
    g.mode = mode;
    g.recordings = recordings();
    g.requests_per_minute = requests_per_minute;
    return g;
  }

  /// Echo for manifests; omits the API key.
  nlohmann::json to_json() const {
    return {{"skg_url", skg_url},
            {"llm_base_url", llm_base_url},
            {"provider", provider},
            {"model_id", model_id},
            {"cache_dir", cache_dir.string()},
            {"templates_dir", templates_dir.string()},
            {"template_version", template_version},
            {"preset", preset},
            {"parallelism", parallelism},
            {"mode", llm::to_string(mode)},
            {"requests_per_minute", requests_per_minute},
            {"seed", seed}};
  }
};

}  // namespace blendkg
