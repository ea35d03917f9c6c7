#include "perfforge/mock_server.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "perfforge/chat_client.hpp"
#include "perfforge/errors.hpp"

namespace perfforge::mockserver {

ReplyTable load_replies(const std::string& path) {
  JsonlFile file = read_jsonl(path);
  ReplyTable out;
  for (const json& j : file.records) {
    try {
      CannedReply r;
      r.content = j.at("content").get<std::string>();
      r.fail_first = j.value("fail_first", 0);
      r.delay_ms = j.value("delay_ms", 0);
      out[j.at("key").get<std::string>()] = std::move(r);
    } catch (const json::exception& e) {
      throw InputError("malformed mock reply record in " + path + ": " + e.what());
    }
  }
  return out;
}

json reply_to_json(const std::string& key, const CannedReply& reply) {
  json j;
  j["key"] = key;
  j["content"] = reply.content;
  if (reply.fail_first > 0) j["fail_first"] = reply.fail_first;
  if (reply.delay_ms > 0) j["delay_ms"] = reply.delay_ms;
  return j;
}

struct MockChatServer::Impl {
  ReplyTable replies;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  mutable std::mutex mu;
  Stats stats;
  std::map<std::string, int> hits;
  int in_flight = 0;

  explicit Impl(ReplyTable r) : replies(std::move(r)) {}
};

MockChatServer::MockChatServer(ReplyTable replies)
    : impl_(std::make_unique<Impl>(std::move(replies))) {
  impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const std::exception&) {
      res.status = 400;
      res.set_content(R"({"error":"invalid JSON body"})", "application/json");
      return;
    }
    std::string model = body.value("model", "");
    std::vector<chat::ChatMessage> messages;
    if (body.contains("messages")) {
      for (const json& m : body.at("messages")) {
        messages.push_back(chat::ChatMessage{m.value("role", ""), m.value("content", "")});
      }
    }
    std::optional<std::uint64_t> seed;
    if (body.contains("seed") && !body.at("seed").is_null()) {
      seed = body.at("seed").get<std::uint64_t>();
    }
    const std::string key = chat::request_key(model, messages, seed);

    const CannedReply* reply = nullptr;
    int hit_count = 0;
    {
      std::lock_guard<std::mutex> lock(impl_->mu);
      ++impl_->stats.total_requests;
      ++impl_->stats.per_model[model];
      ++impl_->stats.per_key[key];
      hit_count = ++impl_->hits[key];
      ++impl_->in_flight;
      impl_->stats.max_in_flight = std::max(impl_->stats.max_in_flight, impl_->in_flight);
      auto it = impl_->replies.find(key);
      if (it != impl_->replies.end()) reply = &it->second;
    }
    struct InFlightGuard {
      Impl* impl;
      ~InFlightGuard() {
        std::lock_guard<std::mutex> lock(impl->mu);
        --impl->in_flight;
      }
    } guard{impl_.get()};

    if (reply == nullptr) {
      res.status = 404;
      res.set_content(json{{"error", "no canned reply for request"}, {"key", key}}.dump(),
                      "application/json");
      return;
    }
    if (reply->delay_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(reply->delay_ms));
    }
    if (hit_count <= reply->fail_first) {
      res.status = 503;
      res.set_content(json{{"error", "transient failure (canned)"}, {"key", key}}.dump(),
                      "application/json");
      return;
    }
    json out;
    out["id"] = "mock-" + key;
    out["object"] = "chat.completion";
    out["model"] = model;
    out["choices"] = json::array({json{{"index", 0},
                                       {"message", json{{"role", "assistant"},
                                                        {"content", reply->content}}},
                                       {"finish_reason", "stop"}}});
    res.set_content(out.dump(), "application/json");
  });

  impl_->server.Get("/debug/stats", [this](const httplib::Request&, httplib::Response& res) {
    Stats s = stats();
    json j;
    j["total_requests"] = s.total_requests;
    j["max_in_flight"] = s.max_in_flight;
    j["per_model"] = s.per_model;
    j["per_key"] = s.per_key;
    res.set_content(j.dump(), "application/json");
  });
}

MockChatServer::~MockChatServer() { stop(); }

int MockChatServer::start(int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port)) {
      throw EnvironmentError("mock server cannot bind port " + std::to_string(port));
    }
    impl_->port = port;
  }
  if (impl_->port <= 0) throw EnvironmentError("mock server cannot bind a port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void MockChatServer::stop() {
  if (impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

std::string MockChatServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

MockChatServer::Stats MockChatServer::stats() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->stats;
}

}  // namespace perfforge::mockserver
