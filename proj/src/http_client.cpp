// SPDX-License-Identifier: Apache-2.0
//
// Chat-completion wire client and the live HTTP answer backend.
#include "finpref/elicitation.hpp"
#include "finpref/error.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace finpref {

using nlohmann::json;

std::string chat_request_body(const EndpointConfig& endpoint, std::span<const ChatMessage> messages) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  json body = {{"model", endpoint.model_id}, {"messages", msgs}, {"temperature", endpoint.temperature}};
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string chat_reply_text(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    fail(ErrorKind::Protocol, std::string("response body is not JSON: ") + e.what());
  }
  const json* content = nullptr;
  if (j.is_object() && j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const json& first = j["choices"][0];
    if (first.is_object() && first.contains("message") && first["message"].is_object() &&
        first["message"].contains("content"))
      content = &first["message"]["content"];
  }
  if (!content || !content->is_string())
    fail(ErrorKind::Protocol, "response lacks choices[0].message.content");
  return content->get<std::string>();
}

namespace {

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

bool transient_status(int status) { return status == 429 || status >= 500; }

httplib::Headers request_headers(const EndpointConfig& endpoint) {
  httplib::Headers headers;
  if (!endpoint.auth_env_var.empty()) {
    const char* key = std::getenv(endpoint.auth_env_var.c_str());
    if (!key || !*key)
      fail(ErrorKind::Config, "environment variable " + endpoint.auth_env_var + " is not set");
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  for (const auto& [k, v] : endpoint.headers) headers.emplace(k, v);
  return headers;
}

}  // namespace

ChatReply send_chat(const EndpointConfig& endpoint, std::span<const ChatMessage> messages) {
  if (messages.empty()) fail(ErrorKind::InvalidArgument, "chat request needs at least one message");
  const httplib::Headers headers = request_headers(endpoint);
  const std::string body = chat_request_body(endpoint, messages);

  std::unique_ptr<httplib::Client> holder;
  try {
    holder = std::make_unique<httplib::Client>(endpoint.base_url);
  } catch (const std::exception& e) {
    fail(ErrorKind::Config, "invalid base_url '" + endpoint.base_url + "': " + e.what());
  }
  httplib::Client& client = *holder;
  if (!client.is_valid()) fail(ErrorKind::Config, "invalid base_url '" + endpoint.base_url + "'");
  const auto timeout = std::chrono::duration<double>(endpoint.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  std::string last_problem;
  for (int attempt = 0;; ++attempt) {
    auto res = client.Post(endpoint.path, headers, body, "application/json");
    if (res) {
      if (res->status >= 200 && res->status < 300) return ChatReply{chat_reply_text(res->body), attempt};
      if (!transient_status(res->status))
        fail(ErrorKind::Endpoint, "HTTP " + std::to_string(res->status) + " from " + endpoint.name +
                                      ": " + excerpt(res->body));
      last_problem = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
    } else {
      last_problem = httplib::to_string(res.error());
    }
    if (attempt >= endpoint.max_retries) break;
    const double wait = endpoint.retry_backoff_seconds * std::pow(2.0, attempt);
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
  }
  fail(ErrorKind::Transport, "endpoint " + endpoint.name + " failed after " +
                                 std::to_string(endpoint.max_retries) + " retries: " + last_problem);
}

namespace {

// Spaces requests to one endpoint at least 60/rpm seconds apart.
class RateLimiter {
 public:
  void wait(const EndpointConfig& endpoint) {
    if (endpoint.requests_per_minute <= 0.0) return;
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(60.0 / endpoint.requests_per_minute));
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      auto& next = next_[endpoint.name];
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next);
      next = slot + interval;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::chrono::steady_clock::time_point> next_;
};

class HttpSession final : public Session {
 public:
  HttpSession(EndpointConfig endpoint, RateLimiter& limiter)
      : endpoint_(std::move(endpoint)), limiter_(limiter) {}

  ChatReply ask(const SurveyItem&, const std::string& prompt) override {
    transcript_.push_back({"user", prompt});
    limiter_.wait(endpoint_);
    ChatReply reply = send_chat(endpoint_, transcript_);
    transcript_.push_back({"assistant", reply.text});
    return reply;
  }

 private:
  EndpointConfig endpoint_;
  RateLimiter& limiter_;
  std::vector<ChatMessage> transcript_;
};

class HttpBackend final : public AnswerBackend {
 public:
  std::string name() const override { return "http"; }

  void check(const RunPlan& plan) override {
    for (const auto& e : plan.endpoints) {
      if (e.base_url.empty()) fail(ErrorKind::Config, "endpoint " + e.name + " has no base_url");
      request_headers(e);  // throws when the key variable is unset
    }
  }

  std::unique_ptr<Session> open_session(const EndpointConfig& endpoint, int) override {
    return std::make_unique<HttpSession>(endpoint, limiter_);
  }

 private:
  RateLimiter limiter_;
};

}  // namespace

std::unique_ptr<AnswerBackend> http_backend() { return std::make_unique<HttpBackend>(); }

}  // namespace finpref
