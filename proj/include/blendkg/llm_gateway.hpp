#pragma once

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "blendkg/error.hpp"
#include "blendkg/io.hpp"
#include "blendkg/turtle.hpp"

namespace blendkg::llm {

using json = nlohmann::json;

enum class Role { System, User, Assistant };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

struct Message {
  Role role = Role::User;
  std::string text;
  std::vector<std::string> images;  // raw PNG/JPEG bytes
};

struct ChatRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_tokens = 4096;
};

struct Usage {
  long input_tokens = 0;
  long output_tokens = 0;
};

enum class ResponseMode { Live, Replayed };

struct ChatResponse {
  std::string text;
  std::string model_id;
  Usage usage;
  ResponseMode mode = ResponseMode::Live;
};

enum class Mode { Live, Record, Replay };

inline Mode parse_mode(const std::string& s) {
  if (s == "live") return Mode::Live;
  if (s == "record") return Mode::Record;
  if (s == "replay") return Mode::Replay;
  throw ConfigError("unknown mode '" + s + "' (expected live|record|replay)");
}

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Live: return "live";
    case Mode::Record: return "record";
    case Mode::Replay: return "replay";
  }
  return "live";
}

/// Canonical serialization used for request keys. Images enter as their
/// SHA-256 so keys stay short.
inline std::string canonical_request(const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    json images = json::array();
    for (const auto& img : m.images) images.push_back(sha256_hex(img));
    messages.push_back({{"role", to_string(m.role)}, {"text", m.text}, {"images", images}});
  }
  json j = {{"model_id", req.model_id},
            {"messages", messages},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens}};
  return j.dump();
}

inline std::string request_key(const ChatRequest& req) { return sha256_hex(canonical_request(req)); }

/// Translates between ChatRequest and one provider's wire format.
class Adapter {
 public:
  virtual ~Adapter() = default;
  virtual std::string path_suffix() const = 0;
  virtual httplib::Headers headers(const std::string& api_key) const = 0;
  virtual json body(const ChatRequest& req) const = 0;
  virtual ChatResponse parse(const json& j, const std::string& fallback_model) const = 0;
};

inline std::string data_url(const std::string& image) {
  auto mime = image_mime_type(image);
  if (mime.empty()) throw ImageDecodeError("image is neither PNG nor JPEG");
  return "data:" + mime + ";base64," + base64_encode(image);
}

class OpenAiAdapter : public Adapter {
 public:
  std::string path_suffix() const override { return "/chat/completions"; }

  httplib::Headers headers(const std::string& api_key) const override {
    httplib::Headers h;
    if (!api_key.empty()) h.emplace("Authorization", "Bearer " + api_key);
    return h;
  }

  json body(const ChatRequest& req) const override {
    json messages = json::array();
    for (const auto& m : req.messages) {
      if (m.images.empty()) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.text}});
        continue;
      }
      json parts = json::array();
      if (!m.text.empty()) parts.push_back({{"type", "text"}, {"text", m.text}});
      for (const auto& img : m.images) parts.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url(img)}}}});
      messages.push_back({{"role", to_string(m.role)}, {"content", parts}});
    }
    return {{"model", req.model_id},
            {"messages", messages},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens}};
  }

  ChatResponse parse(const json& j, const std::string& fallback_model) const override {
    ChatResponse r;
    const auto& content = j.at("choices").at(0).at("message").at("content");
    r.text = content.is_null() ? "" : content.get<std::string>();
    r.model_id = j.value("model", fallback_model);
    if (j.contains("usage")) {
      r.usage.input_tokens = j["usage"].value("prompt_tokens", 0L);
      r.usage.output_tokens = j["usage"].value("completion_tokens", 0L);
    }
    return r;
  }
};

class AnthropicAdapter : public Adapter {
 public:
  std::string path_suffix() const override { return "/messages"; }

  httplib::Headers headers(const std::string& api_key) const override {
    httplib::Headers h{{"anthropic-version", "2023-06-01"}};
    if (!api_key.empty()) h.emplace("x-api-key", api_key);
    return h;
  }

  json body(const ChatRequest& req) const override {
    std::string system;
    json messages = json::array();
    for (const auto& m : req.messages) {
      if (m.role == Role::System) {
        system += (system.empty() ? "" : "\n\n") + m.text;
        continue;
      }
      json parts = json::array();
      for (const auto& img : m.images) {
        auto mime = image_mime_type(img);
        if (mime.empty()) throw ImageDecodeError("image is neither PNG nor JPEG");
        parts.push_back(
            {{"type", "image"},
             {"source", {{"type", "base64"}, {"media_type", mime}, {"data", base64_encode(img)}}}});
      }
      if (!m.text.empty()) parts.push_back({{"type", "text"}, {"text", m.text}});
      messages.push_back({{"role", to_string(m.role)}, {"content", parts}});
    }
    json j = {{"model", req.model_id},
              {"messages", messages},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens}};
    if (!system.empty()) j["system"] = system;
    return j;
  }

  ChatResponse parse(const json& j, const std::string& fallback_model) const override {
    ChatResponse r;
    for (const auto& part : j.at("content"))
      if (part.value("type", "") == "text") r.text += part.value("text", "");
    r.model_id = j.value("model", fallback_model);
    if (j.contains("usage")) {
      r.usage.input_tokens = j["usage"].value("input_tokens", 0L);
      r.usage.output_tokens = j["usage"].value("output_tokens", 0L);
    }
    return r;
  }
};

inline std::unique_ptr<Adapter> make_adapter(const std::string& provider) {
  if (provider == "openai") return std::make_unique<OpenAiAdapter>();
  if (provider == "anthropic") return std::make_unique<AnthropicAdapter>();
  throw ConfigError("unknown provider '" + provider + "' (expected openai|anthropic)");
}

/// Blocking token bucket. Callers beyond the configured rate wait in turn.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  /// `per_minute` <= 0 disables limiting.
  explicit TokenBucket(double per_minute, double burst = 1.0)
      : rate_(per_minute / 60.0), capacity_(std::max(1.0, burst)), tokens_(capacity_), last_(Clock::now()) {}

  void acquire() {
    if (rate_ <= 0) return;
    std::lock_guard lock(mu_);
    refill();
    if (tokens_ < 1.0) {
      std::this_thread::sleep_for(std::chrono::duration<double>((1.0 - tokens_) / rate_));
      refill();
    }
    tokens_ -= 1.0;
  }

 private:
  void refill() {
    auto now = Clock::now();
    tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
  }

  double rate_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mu_;
};

/// JSON-lines store of recorded responses, keyed by request_key.
class RecordingStore {
 public:
  explicit RecordingStore(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(file_);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      try {
        auto j = json::parse(line);
        ChatResponse r;
        r.text = j.at("text").get<std::string>();
        r.model_id = j.value("model_id", "");
        r.usage.input_tokens = j.value("input_tokens", 0L);
        r.usage.output_tokens = j.value("output_tokens", 0L);
        entries_[j.at("key").get<std::string>()] = r;
      } catch (const json::exception& e) {
        throw IoError(file_.string() + ":" + std::to_string(row) + ": bad recording: " + e.what());
      }
    }
  }

  std::optional<ChatResponse> find(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& key, const ChatResponse& r) {
    json j = {{"key", key},
              {"model_id", r.model_id},
              {"text", r.text},
              {"input_tokens", r.usage.input_tokens},
              {"output_tokens", r.usage.output_tokens}};
    std::string line = j.dump() + "\n";
    std::lock_guard lock(mu_);
    std::error_code ec;
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path(), ec);
    std::ofstream out(file_, std::ios::app | std::ios::binary);
    out << line;
    if (!out.flush()) throw IoError("cannot append to " + file_.string());
    entries_[key] = r;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path file_;
  std::map<std::string, ChatResponse> entries_;
  mutable std::mutex mu_;
};

struct GatewayConfig {
  std::string base_url;          // e.g. https://api.openai.com/v1
  std::string provider = "openai";
  std::string api_key;           // from LLM_API_KEY only
  Mode mode = Mode::Live;
  std::filesystem::path recordings;
  double requests_per_minute = 0;
  int max_rate_limit_retries = 5;
  std::chrono::seconds timeout{120};
  Sleeper sleep = real_sleep;

  /// Fills base_url and api_key from LLM_BASE_URL / LLM_API_KEY when set.
  void apply_env() {
    if (const char* v = std::getenv("LLM_BASE_URL"); v && *v) base_url = v;
    if (const char* v = std::getenv("LLM_API_KEY"); v && *v) api_key = v;
  }
};

class Gateway {
 public:
  explicit Gateway(GatewayConfig cfg)
      : cfg_(std::move(cfg)),
        adapter_(make_adapter(cfg_.provider)),
        limiter_(cfg_.requests_per_minute),
        store_(cfg_.recordings.empty() ? std::nullopt : std::make_optional<RecordingStore>(cfg_.recordings)) {
    if (cfg_.mode != Mode::Live && !store_) throw ConfigError("record/replay mode needs a recordings file");
    if (cfg_.mode != Mode::Replay && cfg_.base_url.empty()) throw ConfigError("live LLM calls need a base URL");
  }

  ChatResponse complete(const ChatRequest& req) {
    if (cfg_.mode == Mode::Replay) {
      auto key = request_key(req);
      auto hit = store_->find(key);
      if (!hit) throw ReplayMiss("no recording for request " + key.substr(0, 12));
      hit->mode = ResponseMode::Replayed;
      return *hit;
    }
    auto resp = call_live(req);
    if (cfg_.mode == Mode::Record) store_->put(request_key(req), resp);
    return resp;
  }

  Mode mode() const { return cfg_.mode; }
  std::size_t network_calls() const { return calls_.load(); }

 private:
  ChatResponse call_live(const ChatRequest& req) {
    auto ep = split_url(cfg_.base_url);
    std::string path = ep.path == "/" ? adapter_->path_suffix() : ep.path + adapter_->path_suffix();
    std::string body = adapter_->body(req).dump();
    for (int attempt = 0;; ++attempt) {
      limiter_.acquire();
      httplib::Client client(ep.origin);
      client.set_connection_timeout(10);
      client.set_read_timeout(cfg_.timeout);
      ++calls_;
      auto res = client.Post(path, adapter_->headers(cfg_.api_key), body, "application/json");
      if (!res) throw ServiceError("LLM endpoint unreachable: " + httplib::to_string(res.error()));
      if (res->status == 401 || res->status == 403)
        throw AuthError("LLM endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
      if (res->status == 429) {
        double after = 1.0;
        if (res->has_header("Retry-After")) {
          try {
            after = std::stod(res->get_header_value("Retry-After"));
          } catch (const std::exception&) {
          }
        }
        if (attempt >= cfg_.max_rate_limit_retries)
          throw RateLimited(after, "rate limited after " + std::to_string(attempt + 1) + " attempts");
        cfg_.sleep(std::chrono::milliseconds(static_cast<long>(after * 1000)));
        continue;
      }
      if (res->status < 200 || res->status >= 300)
        throw ServiceError("LLM endpoint returned HTTP " + std::to_string(res->status));
      try {
        auto r = adapter_->parse(json::parse(res->body), req.model_id);
        r.mode = ResponseMode::Live;
        return r;
      } catch (const json::exception& e) {
        throw ServiceError(std::string("malformed LLM response: ") + e.what());
      }
    }
  }

  GatewayConfig cfg_;
  std::unique_ptr<Adapter> adapter_;
  TokenBucket limiter_;
  std::optional<RecordingStore> store_;
  std::atomic<std::size_t> calls_{0};
};

namespace detail {

struct Fence {
  std::string info;
  std::string body;
};

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<Fence> fences(std::string_view text) {
  std::vector<Fence> out;
  std::size_t pos = 0;
  while ((pos = text.find("```", pos)) != std::string_view::npos) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) break;
    std::string info = trim(text.substr(pos + 3, eol - pos - 3));
    auto close = text.find("```", eol + 1);
    if (close == std::string_view::npos) break;
    out.push_back({info, trim(text.substr(eol + 1, close - eol - 1))});
    pos = close + 3;
  }
  return out;
}

inline bool parses(const std::string& s, const rdf::PrefixMap& defaults) {
  if (s.empty()) return false;
  try {
    rdf::parse_turtle(s, defaults);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace detail

/// The Turtle document embedded in a model response. Labeled fences win,
/// then any fence that parses, then the whole text. Whatever is returned
/// parses under `defaults`.
inline std::string extract_turtle_block(std::string_view response,
                                        const rdf::PrefixMap& defaults = rdf::default_prefixes()) {
  auto blocks = detail::fences(response);
  for (const auto& f : blocks) {
    std::string info = f.info;
    std::transform(info.begin(), info.end(), info.begin(), [](unsigned char c) { return std::tolower(c); });
    if ((info == "turtle" || info == "ttl") && detail::parses(f.body, defaults)) return f.body;
  }
  for (const auto& f : blocks)
    if (detail::parses(f.body, defaults)) return f.body;
  std::string whole = detail::trim(response);
  if (detail::parses(whole, defaults)) return whole;
  throw NoTurtleFound("response contains no parseable Turtle");
}

}  // namespace blendkg::llm
