#include "perfforge/orchestrate.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "perfforge/errors.hpp"

namespace perfforge::orchestrate {

struct Journal::Impl {
  std::string path;
  std::map<std::string, std::string> entries;
  std::ofstream out;
  mutable std::mutex mu;
};

Journal Journal::open(const std::string& path) {
  Journal j;
  j.impl_ = std::make_shared<Impl>();
  j.impl_->path = path;
  {
    std::ifstream in(path);
    std::string line;
    std::size_t lineno = 0;
    while (in && std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        json rec = json::parse(line);
        j.impl_->entries[rec.at("key").get<std::string>()] =
            rec.at("content").get<std::string>();
      } catch (const std::exception&) {
        // a torn tail line from a killed run is expected; everything before
        // it stays usable
        break;
      }
    }
  }
  j.impl_->out.open(path, std::ios::app);
  if (!j.impl_->out) throw EnvironmentError("cannot open journal for append: " + path);
  return j;
}

std::optional<std::string> Journal::lookup(const std::string& key) const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  auto it = impl_->entries.find(key);
  if (it == impl_->entries.end()) return std::nullopt;
  return it->second;
}

void Journal::record(const std::string& key, const std::string& content) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  if (impl_->entries.emplace(key, content).second) {
    impl_->out << json{{"key", key}, {"content", content}}.dump() << '\n';
    impl_->out.flush();
  }
}

std::size_t Journal::size() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->entries.size();
}

chat::ChatReply complete_journaled(chat::ChatClient& client,
                                   const std::vector<chat::ChatMessage>& messages,
                                   const chat::RequestOptions& options, Journal* journal) {
  if (journal != nullptr) {
    const std::string key = chat::request_key(client.model_name(), messages, options.seed);
    if (auto cached = journal->lookup(key)) {
      return chat::ChatReply{*cached, "journal"};
    }
    chat::ChatReply reply = client.complete(messages, options);
    journal->record(key, reply.content);
    return reply;
  }
  return client.complete(messages, options);
}

GenerationOutcome single_step_optimize(const std::string& slow_code, chat::ChatClient& client,
                                       const prompts::PromptTemplates& templates,
                                       Journal* journal, std::optional<std::uint64_t> seed) {
  std::string prompt = prompts::render(templates.single_step, {{"slow_code", slow_code}});
  chat::RequestOptions options;
  options.seed = seed;
  chat::ChatReply reply = complete_journaled(client, {{"user", prompt}}, options, journal);
  GenerationOutcome out;
  out.raw_reply = reply.content;
  try {
    out.parsed = serialize::unpack(reply.content, serialize::ParseMode::plan_and_code,
                                   serialize::Strictness::lenient);
  } catch (const ParseError& e) {
    out.error = e.violation();
  }
  return out;
}

std::vector<strategy::CategorizedStrategy> plan_only(const std::string& slow_code,
                                                     chat::ChatClient& client,
                                                     const prompts::PromptTemplates& templates,
                                                     Journal* journal,
                                                     std::optional<std::uint64_t> seed) {
  std::string prompt = prompts::render(templates.planner, {{"slow_code", slow_code}});
  chat::RequestOptions options;
  options.stop = {std::string(serialize::ControlTokens::sugg_close)};
  options.seed = seed;
  chat::ChatReply reply = complete_journaled(client, {{"user", prompt}}, options, journal);
  std::string text = reply.content;
  if (text.find(serialize::ControlTokens::sugg_close) == std::string::npos) {
    text += serialize::ControlTokens::sugg_close;  // provider stripped the stop sequence
  }
  serialize::ParsedOutput parsed;
  try {
    parsed = serialize::unpack(text, serialize::ParseMode::plan_only,
                               serialize::Strictness::lenient);
  } catch (const ParseError& e) {
    throw InputError("empty or unparseable plan: " + e.violation());
  }
  if (parsed.strategies.empty()) throw InputError("planner produced an empty plan");
  return parsed.strategies;
}

std::optional<std::string> extract_code_block(const std::string& reply) {
  // last fenced block wins: instruction-tuned models commonly restate inputs
  // in an earlier block
  std::optional<std::string> last;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = reply.find("```", pos);
    if (open == std::string::npos) break;
    std::size_t content_start = reply.find('\n', open + 3);
    if (content_start == std::string::npos) break;
    ++content_start;
    std::size_t close = reply.find("```", content_start);
    if (close == std::string::npos) break;
    std::size_t content_end = close;
    if (content_end > content_start && reply[content_end - 1] == '\n') --content_end;
    last = reply.substr(content_start, content_end - content_start);
    pos = close + 3;
  }
  if (last) return last;
  try {
    serialize::ParsedOutput parsed = serialize::unpack(
        reply, serialize::ParseMode::plan_and_code, serialize::Strictness::lenient);
    if (parsed.code) return parsed.code;
  } catch (const ParseError&) {
  }
  return std::nullopt;
}

TwoStepTrace two_step(const std::string& slow_code, chat::ChatClient& planner,
                      chat::ChatClient& optimizer, const prompts::PromptTemplates& templates,
                      Journal* journal, std::optional<std::uint64_t> seed) {
  TwoStepTrace trace;
  trace.slow_code = slow_code;
  trace.planner_strategies = plan_only(slow_code, planner, templates, journal, seed);
  trace.planner_raw = serialize::render_strategy_lines(trace.planner_strategies);

  std::string prompt = prompts::render(
      templates.optimizer,
      {{"slow_code", slow_code}, {"strategies", trace.planner_raw}});
  chat::RequestOptions options;
  options.seed = seed;
  chat::ChatReply reply = complete_journaled(optimizer, {{"user", prompt}}, options, journal);
  trace.optimizer_raw = reply.content;
  trace.extracted_code = extract_code_block(reply.content);
  if (!trace.extracted_code) trace.error = "optimizer reply contains no code block";
  return trace;
}

rlmath::GroupSample sample_group(const std::string& sample_id, const std::string& slow_code,
                                 chat::ChatClient& planner, chat::ChatClient& optimizer,
                                 int group_size, const prompts::PromptTemplates& templates,
                                 const EvalContext& eval_context,
                                 const rlmath::RewardConfig& reward_config,
                                 double degenerate_std_epsilon, Journal* journal,
                                 std::uint64_t base_seed) {
  if (group_size < 2) throw UsageError("group size must be >= 2");
  reward_config.validate();

  rlmath::GroupSample group;
  group.id = sample_id;
  group.slow_code = slow_code;
  group.t_slow = eval_context.t_slow;
  group.members.resize(static_cast<std::size_t>(group_size));

  // phase 1: generate all traces (journaled before any evaluation starts)
  std::vector<std::optional<TwoStepTrace>> traces(group.members.size());
  std::vector<std::thread> threads;
  std::mutex error_mu;
  std::exception_ptr first_error;
  for (int i = 0; i < group_size; ++i) {
    threads.emplace_back([&, i] {
      try {
        traces[static_cast<std::size_t>(i)] =
            two_step(slow_code, planner, optimizer, templates, journal,
                     base_seed + static_cast<std::uint64_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (std::thread& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
  for (int i = 0; i < group_size; ++i) {
    if (!traces[static_cast<std::size_t>(i)]) {
      throw RemoteServiceError("incomplete group: member " + std::to_string(i) +
                               " produced no trace");
    }
  }

  // phase 2: evaluate and reward
  for (int i = 0; i < group_size; ++i) {
    rlmath::GroupMember& m = group.members[static_cast<std::size_t>(i)];
    TwoStepTrace& trace = *traces[static_cast<std::size_t>(i)];
    m.index = i;
    m.strategies = trace.planner_strategies;
    if (!trace.extracted_code) {
      m.error = trace.error.value_or("malformed generation");
      m.reward = -reward_config.omega;
      continue;
    }
    m.generated_code = *trace.extracted_code;
    try {
      m.eval = evalbench::evaluate_candidate(m.generated_code, eval_context.tests,
                                             eval_context.t_slow, eval_context.run_config);
      m.reward = rlmath::reward(*m.eval, eval_context.t_slow, reward_config);
    } catch (const Error& e) {
      m.error = e.what();
      m.reward = -reward_config.omega;
    }
  }

  std::vector<double> rewards;
  rewards.reserve(group.members.size());
  for (const rlmath::GroupMember& m : group.members) rewards.push_back(m.reward);
  std::vector<double> advantages = rlmath::group_advantages(rewards, degenerate_std_epsilon);
  for (std::size_t i = 0; i < group.members.size(); ++i) {
    group.members[i].advantage = advantages[i];
  }
  return group;
}

json to_json(const TwoStepTrace& t) {
  json j;
  j["id"] = t.id;
  j["slow_code"] = t.slow_code;
  json strategies = json::array();
  for (const strategy::CategorizedStrategy& s : t.planner_strategies) {
    strategies.push_back(json{{"category", s.category}, {"desc", s.desc}});
  }
  j["planner_strategies"] = strategies;
  j["planner_raw"] = t.planner_raw;
  j["optimizer_raw"] = t.optimizer_raw;
  j["extracted_code"] = t.extracted_code ? json(*t.extracted_code) : json(nullptr);
  j["error"] = t.error ? json(*t.error) : json(nullptr);
  return j;
}

}  // namespace perfforge::orchestrate
