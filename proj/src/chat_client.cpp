#include "perfforge/chat_client.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "perfforge/errors.hpp"
#include "perfforge/hash.hpp"

namespace perfforge::chat {

void ChatClientConfig::validate() const {
  if (endpoint_url.empty()) throw UsageError("chat endpoint url must be set");
  if (model_name.empty()) throw UsageError("chat model name must be set");
  if (max_retries < 0) throw UsageError("max retries must be >= 0");
  if (!(backoff_base_seconds > 0)) throw UsageError("backoff base must be positive");
  if (concurrency_limit < 1) throw UsageError("concurrency limit must be >= 1");
  if (!(temperature >= 0)) throw UsageError("temperature must be >= 0");
  if (max_tokens < 1) throw UsageError("max tokens must be >= 1");
}

ChatClientConfig ChatClientConfig::from_json(const json& j) {
  ChatClientConfig c;
  if (j.contains("endpoint_url")) c.endpoint_url = j.at("endpoint_url").get<std::string>();
  if (j.contains("model_name")) c.model_name = j.at("model_name").get<std::string>();
  if (j.contains("api_key_env_var")) c.api_key_env_var = j.at("api_key_env_var").get<std::string>();
  if (j.contains("temperature")) c.temperature = j.at("temperature").get<double>();
  if (j.contains("max_tokens")) c.max_tokens = j.at("max_tokens").get<int>();
  if (j.contains("stop_sequences")) {
    c.stop_sequences = j.at("stop_sequences").get<std::vector<std::string>>();
  }
  if (j.contains("max_retries")) c.max_retries = j.at("max_retries").get<int>();
  if (j.contains("backoff_base_seconds")) {
    c.backoff_base_seconds = j.at("backoff_base_seconds").get<double>();
  }
  if (j.contains("concurrency_limit")) c.concurrency_limit = j.at("concurrency_limit").get<int>();
  if (j.contains("read_timeout_seconds")) {
    c.read_timeout_seconds = j.at("read_timeout_seconds").get<double>();
  }
  return c;
}

json ChatClientConfig::to_json() const {
  json j;
  j["endpoint_url"] = endpoint_url;
  j["model_name"] = model_name;
  j["api_key_env_var"] = api_key_env_var;
  j["temperature"] = temperature;
  j["max_tokens"] = max_tokens;
  j["stop_sequences"] = stop_sequences;
  j["max_retries"] = max_retries;
  j["backoff_base_seconds"] = backoff_base_seconds;
  j["concurrency_limit"] = concurrency_limit;
  j["read_timeout_seconds"] = read_timeout_seconds;
  return j;
}

std::string request_key(const std::string& model, const std::vector<ChatMessage>& messages,
                        std::optional<std::uint64_t> seed) {
  std::string canon = model;
  canon += '\x1f';
  for (const ChatMessage& m : messages) {
    canon += m.role;
    canon += '\x1e';
    canon += m.content;
    canon += '\x1f';
  }
  canon += "seed=";
  canon += seed ? std::to_string(*seed) : "-";
  return fnv1a64_hex(canon);
}

namespace {

// counting gate bounding in-flight requests per client
class Gate {
 public:
  explicit Gate(int limit) : available_(limit) {}
  void acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int available_;
};

struct GateGuard {
  Gate& gate;
  explicit GateGuard(Gate& g) : gate(g) { gate.acquire(); }
  ~GateGuard() { gate.release(); }
};

}  // namespace

struct HttpChatClient::Impl {
  ChatClientConfig config;
  Gate gate;

  explicit Impl(ChatClientConfig c) : config(std::move(c)), gate(config.concurrency_limit) {}
};

HttpChatClient::HttpChatClient(ChatClientConfig config) {
  config.validate();
  impl_ = std::make_unique<Impl>(std::move(config));
}

HttpChatClient::~HttpChatClient() = default;

const std::string& HttpChatClient::model_name() const { return impl_->config.model_name; }

const ChatClientConfig& HttpChatClient::config() const { return impl_->config; }

ChatReply HttpChatClient::complete(const std::vector<ChatMessage>& messages,
                                   const RequestOptions& options) {
  const ChatClientConfig& cfg = impl_->config;

  json body;
  body["model"] = cfg.model_name;
  json msgs = json::array();
  for (const ChatMessage& m : messages) {
    msgs.push_back(json{{"role", m.role}, {"content", m.content}});
  }
  body["messages"] = msgs;
  body["temperature"] = options.temperature.value_or(cfg.temperature);
  body["max_tokens"] = options.max_tokens.value_or(cfg.max_tokens);
  const std::vector<std::string>& stop =
      options.stop.empty() ? cfg.stop_sequences : options.stop;
  if (!stop.empty()) body["stop"] = stop;
  if (options.seed) body["seed"] = *options.seed;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!cfg.api_key_env_var.empty()) {
    if (const char* key = std::getenv(cfg.api_key_env_var.c_str()); key != nullptr && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  GateGuard in_flight(impl_->gate);
  std::string last_failure = "no attempt made";
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      const double backoff = cfg.backoff_base_seconds * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    }
    httplib::Client http(cfg.endpoint_url);
    http.set_connection_timeout(std::chrono::duration<double>(5.0));
    http.set_read_timeout(std::chrono::duration<double>(cfg.read_timeout_seconds));
    auto res = http.Post("/v1/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_failure = "server status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw RemoteServiceError("chat endpoint " + cfg.endpoint_url + " returned status " +
                               std::to_string(res->status) + ": " + res->body);
    }
    try {
      json reply = json::parse(res->body);
      const json& choice = reply.at("choices").at(0);
      ChatReply out;
      out.content = choice.at("message").at("content").get<std::string>();
      out.finish_reason = choice.value("finish_reason", "stop");
      return out;
    } catch (const json::exception& e) {
      throw RemoteServiceError("malformed chat-completions response from " + cfg.endpoint_url +
                               ": " + e.what());
    }
  }
  throw RemoteServiceError("chat endpoint " + cfg.endpoint_url + " unreachable after " +
                           std::to_string(cfg.max_retries + 1) + " attempts (" + last_failure +
                           ")");
}

}  // namespace perfforge::chat
