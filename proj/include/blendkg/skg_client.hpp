#pragma once

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "blendkg/error.hpp"
#include "blendkg/io.hpp"
#include "blendkg/llm_gateway.hpp"
#include "blendkg/turtle.hpp"

namespace blendkg::skg {

using json = nlohmann::json;

enum class CachePolicy { Live, CacheFirst, ReplayOnly };

inline CachePolicy parse_cache_policy(const std::string& s) {
  if (s == "live") return CachePolicy::Live;
  if (s == "cache-first") return CachePolicy::CacheFirst;
  if (s == "replay") return CachePolicy::ReplayOnly;
  throw ConfigError("unknown cache policy '" + s + "' (expected live|cache-first|replay)");
}

inline constexpr std::size_t kMaxTextLength = 2000;

struct SkgRequest {
  std::string text;
  std::string service_url;
  CachePolicy cache_policy = CachePolicy::CacheFirst;
};

struct CacheEntry {
  std::string key;
  std::string turtle;
  std::string fetched_at;
};

/// Key of the cache entry for `text` sent to `service_url`.
inline std::string cache_key(const std::string& service_url, const std::string& text) {
  std::string material = service_url;
  material.push_back('\0');
  material += text;
  return sha256_hex(material);
}

inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

/// Directory of `<key>.ttl` bodies plus `index.json` mapping each key to
/// its url, text and fetch time.
class Cache {
 public:
  explicit Cache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::optional<CacheEntry> get(const std::string& key) const {
    auto path = dir_ / (key + ".ttl");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    std::lock_guard lock(mu_);
    auto index = load_index();
    std::string fetched_at;
    if (auto it = index.find(key); it != index.end()) fetched_at = it->value("fetched_at", "");
    return CacheEntry{key, read_file(path), fetched_at};
  }

  void put(const SkgRequest& req, const CacheEntry& entry) {
    write_file_atomic(dir_ / (entry.key + ".ttl"), entry.turtle);
    std::lock_guard lock(mu_);
    auto index = load_index();
    index[entry.key] = {{"service_url", req.service_url}, {"text", req.text}, {"fetched_at", entry.fetched_at}};
    write_file_atomic(dir_ / "index.json", index.dump(2) + "\n");
  }

  /// Index rows, sorted by key.
  json entries() const {
    std::lock_guard lock(mu_);
    return load_index();
  }

  /// Removes bodies without an index row and index rows without a body.
  std::size_t prune() {
    std::lock_guard lock(mu_);
    auto index = load_index();
    std::size_t removed = 0;
    std::error_code ec;
    if (std::filesystem::exists(dir_, ec)) {
      for (const auto& f : std::filesystem::directory_iterator(dir_)) {
        if (f.path().extension() != ".ttl") continue;
        if (!index.contains(f.path().stem().string())) {
          std::filesystem::remove(f.path(), ec);
          ++removed;
        }
      }
    }
    for (auto it = index.begin(); it != index.end();) {
      if (!std::filesystem::exists(dir_ / (it.key() + ".ttl"), ec)) {
        it = index.erase(it);
        ++removed;
      } else {
        ++it;
      }
    }
    if (removed) write_file_atomic(dir_ / "index.json", index.dump(2) + "\n");
    return removed;
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  json load_index() const {
    auto path = dir_ / "index.json";
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return json::object();
    try {
      return json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw IoError("corrupt cache index " + path.string() + ": " + e.what());
    }
  }

  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  Sleeper sleep = real_sleep;
};

class Client {
 public:
  /// Bodies are cached under `<cache_dir>/skg/`.
  explicit Client(const std::filesystem::path& cache_dir, RetryPolicy retry = {})
      : cache_(cache_dir / "skg"), retry_(std::move(retry)) {}

  /// The service's Turtle for `req.text`, honouring the cache policy.
  std::string fetch_turtle(const SkgRequest& req) {
    if (req.text.empty()) throw std::invalid_argument("SKG request text is empty");
    if (utf8_length(req.text) > kMaxTextLength)
      throw std::invalid_argument("SKG request text exceeds " + std::to_string(kMaxTextLength) + " characters");
    auto key = cache_key(req.service_url, req.text);
    if (req.cache_policy != CachePolicy::Live) {
      if (auto hit = cache_.get(key)) return hit->turtle;
      if (req.cache_policy == CachePolicy::ReplayOnly)
        throw CacheMiss("no cached SKG for \"" + req.text.substr(0, 60) + "\"");
    }
    std::string body = post(req);
    try {
      rdf::parse_turtle(body);
    } catch (const Error& e) {
      throw BadServiceResponse(std::string("SKG service returned non-Turtle payload: ") + e.what());
    }
    if (req.cache_policy == CachePolicy::CacheFirst) cache_.put(req, {key, body, utc_timestamp()});
    return body;
  }

  rdf::Graph fetch_skg(const SkgRequest& req) { return rdf::parse_turtle(fetch_turtle(req)); }

  std::size_t network_calls() const { return calls_.load(); }
  Cache& cache() { return cache_; }

 private:
  std::string post(const SkgRequest& req) {
    if (req.service_url.empty()) throw ConfigError("no SKG service URL configured");
    auto ep = split_url(req.service_url);
    std::string payload = json{{"text", req.text}}.dump();
    auto backoff = retry_.initial_backoff;
    std::string last_failure;
    for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
      httplib::Client client(ep.origin);
      client.set_connection_timeout(10);
      client.set_read_timeout(120);
      ++calls_;
      auto res = client.Post(ep.path, httplib::Headers{{"Accept", "text/turtle"}}, payload, "application/json");
      if (res && res->status >= 200 && res->status < 300) return res->body;
      if (res && res->status < 500)
        throw BadServiceResponse("SKG service rejected request (HTTP " + std::to_string(res->status) + ")");
      last_failure = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
      if (attempt < retry_.attempts) {
        retry_.sleep(backoff);
        backoff *= 2;
      }
    }
    throw ServiceUnavailable("SKG service failed after " + std::to_string(retry_.attempts) +
                             " attempts: " + last_failure);
  }

  Cache cache_;
  RetryPolicy retry_;
  std::atomic<std::size_t> calls_{0};
};

/// Natural-language description of `image`, produced with `caption_prompt`.
inline std::string caption_image(const std::string& image, llm::Gateway& gateway, const std::string& model_id,
                                 const std::string& caption_prompt) {
  if (image_mime_type(image).empty()) throw ImageDecodeError("image is neither PNG nor JPEG");
  llm::ChatRequest req;
  req.model_id = model_id;
  req.messages.push_back({llm::Role::User, caption_prompt, {image}});
  auto resp = gateway.complete(req);
  if (resp.text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw EmptyCaption("captioning model returned no text");
  return llm::detail::trim(resp.text);
}

}  // namespace blendkg::skg
