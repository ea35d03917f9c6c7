#pragma once

#include <map>
#include <memory>
#include <string>

#include "perfforge/jsonl.hpp"

namespace perfforge::mockserver {

// One canned chat reply, replayed by request key (see chat::request_key).
// fail_first makes the first N hits of the key return 503 (retry testing);
// delay_ms stalls the handler (concurrency/timeout testing).
struct CannedReply {
  std::string content;
  int fail_first = 0;
  int delay_ms = 0;
};

using ReplyTable = std::map<std::string, CannedReply>;

// Replies file: JSONL of {key, content, fail_first?, delay_ms?}.
ReplyTable load_replies(const std::string& path);
json reply_to_json(const std::string& key, const CannedReply& reply);

// Deterministic local chat-completions service for offline end-to-end tests.
// Unknown keys get 404 carrying the computed key so fixtures can be authored
// from real requests.
class MockChatServer {
 public:
  explicit MockChatServer(ReplyTable replies);
  ~MockChatServer();

  MockChatServer(const MockChatServer&) = delete;
  MockChatServer& operator=(const MockChatServer&) = delete;

  // Binds 127.0.0.1; port 0 picks a free port. Returns the bound port.
  int start(int port = 0);
  void stop();
  std::string base_url() const;

  struct Stats {
    int total_requests = 0;
    int max_in_flight = 0;
    std::map<std::string, int> per_model;
    std::map<std::string, int> per_key;
  };
  Stats stats() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace perfforge::mockserver
