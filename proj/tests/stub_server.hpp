#pragma once

#include <httplib.h>

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

namespace blendkg::testing {

/// Local HTTP server answering every POST with `handler`, counting calls.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit StubServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      {
        std::lock_guard lock(mu_);
        last_path_ = req.path;
        last_body_ = req.body;
        last_headers_ = req.headers;
      }
      handler_(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path = "") const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
  int calls() const { return calls_.load(); }

  std::string last_path() const {
    std::lock_guard lock(mu_);
    return last_path_;
  }
  std::string last_body() const {
    std::lock_guard lock(mu_);
    return last_body_;
  }
  std::string last_header(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = last_headers_.find(key);
    return it == last_headers_.end() ? "" : it->second;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  mutable std::mutex mu_;
  std::string last_path_;
  std::string last_body_;
  httplib::Headers last_headers_;
};

/// OpenAI-style chat-completions body carrying `text`.
inline std::string chat_body(const std::string& text) {
  std::string escaped;
  for (char c : text) {
    switch (c) {
      case '"': escaped += "\\\""; break;
      case '\\': escaped += "\\\\"; break;
      case '\n': escaped += "\\n"; break;
      default: escaped += c;
    }
  }
  return R"({"model":"stub","choices":[{"message":{"role":"assistant","content":")" + escaped +
         R"("}}],"usage":{"prompt_tokens":3,"completion_tokens":1}})";
}

}  // namespace blendkg::testing
