#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perfforge/strategy.hpp"

namespace perfforge::serialize {

// The four control tokens delimiting strategy and code spans. Fixed per
// corpus version; payloads may not contain them (no escaping).
struct ControlTokens {
  static constexpr std::string_view sugg_open = "[SUGG/]";
  static constexpr std::string_view sugg_close = "[/SUGG]";
  static constexpr std::string_view opt_open = "[OPT/]";
  static constexpr std::string_view opt_close = "[/OPT]";
};

struct TrainingExample {
  std::string instruction;
  std::string slow_code;
  std::string target;
};

enum class ParseMode { plan_only, plan_and_code };
enum class Strictness { strict, lenient };

struct ParsedOutput {
  std::vector<strategy::CategorizedStrategy> strategies;
  std::optional<std::string> code;  // absent in plan-only
};

// Byte-deterministic single-step target:
//   [SUGG/]\n
//   1. <category>: <desc>\n
//   ...
//   [/SUGG]\n[OPT/]\n<code>\n[/OPT]
// Rejects empty strategy lists, control tokens in payloads, newlines inside
// strategy fields, and "<category>" text that would break the line grammar.
std::string pack(const std::vector<strategy::CategorizedStrategy>& strategies,
                 const std::string& fast_code);

// Strict mode demands the exact grammar for the mode (each token once, in
// order, nothing outside the frame). Lenient mode salvages truncated
// generations: text before [SUGG/] is ignored and a missing final [/OPT]
// with a nonempty code span yields the span as code.
ParsedOutput unpack(const std::string& output, ParseMode mode, Strictness strictness);

// Numbered strategy lines as rendered inside the SUGG span (also used in
// optimizer prompts).
std::string render_strategy_lines(std::span<const strategy::CategorizedStrategy> strategies);

// Negative sum of per-token log-probabilities. Entries must be <= 0.
double lm_nll(std::span<const double> target_token_logprobs);

// Renders {instruction, input, output} for SFT toolchains; the instruction
// template may interpolate {slow_code}.
TrainingExample make_training_example(const std::string& instruction_template,
                                      const strategy::AnnotatedPair& pair);

}  // namespace perfforge::serialize
