#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "perfforge/jsonl.hpp"

namespace perfforge::chat {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct RequestOptions {
  std::optional<double> temperature;
  std::optional<int> max_tokens;
  std::vector<std::string> stop;
  std::optional<std::uint64_t> seed;
};

struct ChatReply {
  std::string content;
  std::string finish_reason;
};

struct ChatClientConfig {
  std::string endpoint_url;  // e.g. http://127.0.0.1:8731
  std::string model_name;
  std::string api_key_env_var = "PERFFORGE_API_KEY";
  double temperature = 0.7;
  int max_tokens = 2048;
  std::vector<std::string> stop_sequences;
  int max_retries = 3;
  double backoff_base_seconds = 0.2;
  int concurrency_limit = 4;
  double read_timeout_seconds = 120.0;

  void validate() const;
  static ChatClientConfig from_json(const json& j);
  json to_json() const;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;

  // Throws RemoteServiceError after the retry budget is exhausted.
  virtual ChatReply complete(const std::vector<ChatMessage>& messages,
                             const RequestOptions& options = {}) = 0;

  virtual const std::string& model_name() const = 0;
};

// The canonical identity of a request, shared with the mock server: replies
// are replayed by this key. Temperature and stop are intentionally excluded;
// (model, messages, seed) define the sample identity.
std::string request_key(const std::string& model, const std::vector<ChatMessage>& messages,
                        std::optional<std::uint64_t> seed);

// Chat-completions JSON over HTTP. Bounded retries with exponential backoff;
// in-flight requests capped at concurrency_limit.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(ChatClientConfig config);
  ~HttpChatClient() override;

  ChatReply complete(const std::vector<ChatMessage>& messages,
                     const RequestOptions& options = {}) override;
  const std::string& model_name() const override;
  const ChatClientConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace perfforge::chat
