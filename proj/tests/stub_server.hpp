#pragma once

// In-process chat-completions endpoint for protocol tests.

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace stub {

inline constexpr const char* kModel = "stub-chat-1";

inline std::string completion(const std::string& content) {
  nlohmann::json j;
  j["id"] = "stub";
  j["model"] = kModel;
  j["choices"] = nlohmann::json::array(
      {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}});
  return j.dump();
}

/// The user message with the prompt and blank line removed.
inline std::string document_text(const nlohmann::json& body) {
  const auto content = body.at("messages").at(0).at("content").get<std::string>();
  const auto sep = content.find("\n\n");
  return sep == std::string::npos ? content : content.substr(sep + 2);
}

class ChatServer {
 public:
  using Handler = std::function<void(const nlohmann::json& body, httplib::Response& res)>;

  /// Default behaviour: echoes the document with an LLM-flavoured sentence.
  static void revise(const nlohmann::json& body, httplib::Response& res) {
    res.set_content(completion(document_text(body) + " Additionally, this is significant."),
                    "application/json");
  }

  explicit ChatServer(Handler handler = revise) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body = nlohmann::json::parse(req.body);
      {
        std::lock_guard lock(mutex_);
        requests_.push_back(body);
        auth_headers_.push_back(req.get_header_value("Authorization"));
      }
      handler_(body, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~ChatServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }

  std::size_t request_count() {
    std::lock_guard lock(mutex_);
    return requests_.size();
  }

  std::vector<nlohmann::json> requests() {
    std::lock_guard lock(mutex_);
    return requests_;
  }

  std::vector<std::string> auth_headers() {
    std::lock_guard lock(mutex_);
    return auth_headers_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mutex_;
  std::vector<nlohmann::json> requests_;
  std::vector<std::string> auth_headers_;
};

}  // namespace stub
