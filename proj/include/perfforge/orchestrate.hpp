#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "perfforge/chat_client.hpp"
#include "perfforge/evalbench.hpp"
#include "perfforge/prompts.hpp"
#include "perfforge/rlmath.hpp"
#include "perfforge/serialize.hpp"

namespace perfforge::orchestrate {

// Append-only completion cache: every model reply is persisted (keyed by
// request key) before any evaluation starts, so a killed run resumes without
// re-calling completed requests.
class Journal {
 public:
  static Journal open(const std::string& path);

  std::optional<std::string> lookup(const std::string& key) const;
  void record(const std::string& key, const std::string& content);
  std::size_t size() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// Journal-aware call: reuse a journaled reply or issue the request and
// journal it. A null journal degenerates to a plain call.
chat::ChatReply complete_journaled(chat::ChatClient& client,
                                   const std::vector<chat::ChatMessage>& messages,
                                   const chat::RequestOptions& options, Journal* journal);

struct GenerationOutcome {
  std::string raw_reply;
  std::optional<serialize::ParsedOutput> parsed;
  std::optional<std::string> error;  // malformed generation, recorded not raised
};

// One-shot plan+code generation; the reply is parsed leniently and a parse
// failure becomes a malformed-generation record.
GenerationOutcome single_step_optimize(const std::string& slow_code, chat::ChatClient& client,
                                       const prompts::PromptTemplates& templates,
                                       Journal* journal = nullptr,
                                       std::optional<std::uint64_t> seed = std::nullopt);

// Planner call with "[/SUGG]" as stop sequence; the stop token is appended
// before parsing when the provider strips it. Throws InputError on an empty
// plan.
std::vector<strategy::CategorizedStrategy> plan_only(const std::string& slow_code,
                                                     chat::ChatClient& client,
                                                     const prompts::PromptTemplates& templates,
                                                     Journal* journal = nullptr,
                                                     std::optional<std::uint64_t> seed =
                                                         std::nullopt);

struct TwoStepTrace {
  std::string id;
  std::string slow_code;
  std::vector<strategy::CategorizedStrategy> planner_strategies;
  std::string planner_raw;
  std::string optimizer_raw;
  std::optional<std::string> extracted_code;
  std::optional<std::string> error;
};

// plan_only, then the optimizer prompt rendered with the strategies, then
// code extraction from the optimizer reply. Planner failures propagate;
// a malformed optimizer reply leaves extracted_code absent.
TwoStepTrace two_step(const std::string& slow_code, chat::ChatClient& planner,
                      chat::ChatClient& optimizer, const prompts::PromptTemplates& templates,
                      Journal* journal = nullptr,
                      std::optional<std::uint64_t> seed = std::nullopt);

// Content of the LAST fenced code block; falls back to the lenient OPT span.
std::optional<std::string> extract_code_block(const std::string& reply);

struct EvalContext {
  std::vector<evalbench::TestCase> tests;
  double t_slow = 0.0;
  evalbench::RunConfig run_config;
};

// G independent two-step traces, each compiled/judged/measured and rewarded;
// malformed or uncompilable members receive -omega; advantages are
// group-normalized. Member i carries request seed base_seed + i.
rlmath::GroupSample sample_group(const std::string& sample_id, const std::string& slow_code,
                                 chat::ChatClient& planner, chat::ChatClient& optimizer,
                                 int group_size, const prompts::PromptTemplates& templates,
                                 const EvalContext& eval_context,
                                 const rlmath::RewardConfig& reward_config,
                                 double degenerate_std_epsilon, Journal* journal,
                                 std::uint64_t base_seed);

json to_json(const TwoStepTrace& t);

}  // namespace perfforge::orchestrate
