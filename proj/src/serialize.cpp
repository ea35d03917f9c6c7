#include "perfforge/serialize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "perfforge/errors.hpp"
#include "perfforge/prompts.hpp"

namespace perfforge::serialize {

namespace {

constexpr std::array<std::string_view, 4> kTokens = {
    ControlTokens::sugg_open, ControlTokens::sugg_close, ControlTokens::opt_open,
    ControlTokens::opt_close};

void reject_control_tokens(const std::string& payload, const char* what) {
  for (std::string_view tok : kTokens) {
    if (payload.find(tok) != std::string::npos) {
      throw InputError(std::string("unsafe payload: ") + what + " contains control token " +
                       std::string(tok));
    }
  }
}

std::size_t count_occurrences(const std::string& text, std::string_view tok) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while ((pos = text.find(tok, pos)) != std::string::npos) {
    ++n;
    pos += tok.size();
  }
  return n;
}

// "<n>. <category>: <desc>"; strict mode also pins n to the line's position.
std::optional<strategy::CategorizedStrategy> parse_strategy_line(const std::string& line,
                                                                 std::size_t expect_number,
                                                                 bool strict) {
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i == 0 || i + 1 >= line.size() || line[i] != '.' || line[i + 1] != ' ') return std::nullopt;
  if (strict && line.substr(0, i) != std::to_string(expect_number)) return std::nullopt;
  std::string rest = line.substr(i + 2);
  std::size_t sep = rest.find(": ");
  if (sep == std::string::npos || sep == 0) return std::nullopt;
  return strategy::CategorizedStrategy{rest.substr(0, sep), rest.substr(sep + 2)};
}

std::vector<strategy::CategorizedStrategy> parse_sugg_span(const std::string& span, bool strict) {
  std::vector<strategy::CategorizedStrategy> out;
  std::istringstream in(span);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!strict && !line.empty() && line.back() == '\r') line.pop_back();
    auto parsed = parse_strategy_line(line, out.size() + 1, strict);
    if (parsed) {
      out.push_back(std::move(*parsed));
      continue;
    }
    if (strict) {
      throw ParseError("strategy line " + std::to_string(lineno) +
                       " does not match '<n>. <category>: <desc>': '" + line + "'");
    }
    // lenient: blank lines and stray prose inside the span are skipped
  }
  if (out.empty()) throw ParseError("empty strategy span");
  return out;
}

}  // namespace

std::string render_strategy_lines(std::span<const strategy::CategorizedStrategy> strategies) {
  std::ostringstream out;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    if (i > 0) out << '\n';
    out << (i + 1) << ". " << strategies[i].category << ": " << strategies[i].desc;
  }
  return out.str();
}

std::string pack(const std::vector<strategy::CategorizedStrategy>& strategies,
                 const std::string& fast_code) {
  if (strategies.empty()) throw InputError("packing requires at least one strategy");
  for (const strategy::CategorizedStrategy& s : strategies) {
    if (s.category.empty() || s.desc.empty()) {
      throw InputError("packing requires nonempty category and desc");
    }
    reject_control_tokens(s.category, "strategy category");
    reject_control_tokens(s.desc, "strategy desc");
    if (s.category.find_first_of("\n\r") != std::string::npos ||
        s.desc.find_first_of("\n\r") != std::string::npos) {
      throw InputError("unsafe payload: strategy fields must be single-line");
    }
    if (s.category.find(": ") != std::string::npos) {
      throw InputError("unsafe payload: category '" + s.category +
                       "' contains the line separator ': '");
    }
  }
  reject_control_tokens(fast_code, "code");

  std::string out;
  out += ControlTokens::sugg_open;
  out += '\n';
  out += render_strategy_lines(strategies);
  out += '\n';
  out += ControlTokens::sugg_close;
  out += '\n';
  out += ControlTokens::opt_open;
  out += '\n';
  out += fast_code;
  out += '\n';
  out += ControlTokens::opt_close;
  return out;
}

ParsedOutput unpack(const std::string& output, ParseMode mode, Strictness strictness) {
  const bool strict = strictness == Strictness::strict;
  const bool want_code = mode == ParseMode::plan_and_code;

  if (strict) {
    // token census first so violations are named precisely
    const std::size_t expected_tokens = want_code ? 4 : 2;
    for (std::size_t t = 0; t < expected_tokens; ++t) {
      std::size_t n = count_occurrences(output, kTokens[t]);
      if (n == 0) throw ParseError(std::string("missing ") + std::string(kTokens[t]));
      if (n > 1) throw ParseError(std::string("duplicated ") + std::string(kTokens[t]));
    }
    if (!want_code) {
      for (std::size_t t = 2; t < 4; ++t) {
        if (count_occurrences(output, kTokens[t]) != 0) {
          throw ParseError(std::string("unexpected ") + std::string(kTokens[t]) +
                           " in plan-only output");
        }
      }
    }
    std::array<std::size_t, 4> pos{};
    for (std::size_t t = 0; t < expected_tokens; ++t) pos[t] = output.find(kTokens[t]);
    for (std::size_t t = 1; t < expected_tokens; ++t) {
      if (pos[t] < pos[t - 1]) {
        throw ParseError(std::string("misordered ") + std::string(kTokens[t]) + " before " +
                         std::string(kTokens[t - 1]));
      }
    }
    if (pos[0] != 0) throw ParseError("content before [SUGG/]");

    const std::string open_frame = std::string(ControlTokens::sugg_open) + "\n";
    if (output.rfind(open_frame, 0) != 0) throw ParseError("missing newline after [SUGG/]");
    std::size_t sugg_close_at = pos[1];
    if (sugg_close_at == open_frame.size()) throw ParseError("empty strategy span");
    if (sugg_close_at < open_frame.size() + 1 || output[sugg_close_at - 1] != '\n') {
      throw ParseError("missing newline before [/SUGG]");
    }
    std::string sugg_span =
        output.substr(open_frame.size(), sugg_close_at - 1 - open_frame.size());
    ParsedOutput parsed;
    parsed.strategies = parse_sugg_span(sugg_span, true);

    if (!want_code) {
      if (sugg_close_at + ControlTokens::sugg_close.size() != output.size()) {
        throw ParseError("content after [/SUGG] in plan-only output");
      }
      return parsed;
    }

    const std::string mid_frame = std::string(ControlTokens::sugg_close) + "\n" +
                                  std::string(ControlTokens::opt_open) + "\n";
    if (output.compare(sugg_close_at, mid_frame.size(), mid_frame) != 0) {
      throw ParseError("expected [/SUGG]\\n[OPT/]\\n frame");
    }
    const std::size_t code_begin = sugg_close_at + mid_frame.size();
    const std::string end_frame = "\n" + std::string(ControlTokens::opt_close);
    if (output.size() < code_begin + end_frame.size() ||
        output.compare(output.size() - end_frame.size(), end_frame.size(), end_frame) != 0) {
      throw ParseError("output does not end with \\n[/OPT]");
    }
    const std::size_t code_end = output.size() - end_frame.size();
    if (code_end < code_begin) throw ParseError("misordered [/OPT] before code span");
    parsed.code = output.substr(code_begin, code_end - code_begin);
    return parsed;
  }

  // lenient: salvage truncated generations
  std::size_t sugg_open_at = output.find(ControlTokens::sugg_open);
  if (sugg_open_at == std::string::npos) throw ParseError("missing [SUGG/]");
  std::size_t span_begin = sugg_open_at + ControlTokens::sugg_open.size();
  std::size_t sugg_close_at = output.find(ControlTokens::sugg_close, span_begin);
  if (sugg_close_at == std::string::npos) throw ParseError("missing [/SUGG]");
  ParsedOutput parsed;
  parsed.strategies = parse_sugg_span(output.substr(span_begin, sugg_close_at - span_begin), false);
  if (!want_code) return parsed;

  std::size_t opt_open_at =
      output.find(ControlTokens::opt_open, sugg_close_at + ControlTokens::sugg_close.size());
  if (opt_open_at == std::string::npos) return parsed;  // plan parsed, no code span
  std::size_t code_begin = opt_open_at + ControlTokens::opt_open.size();
  if (code_begin < output.size() && output[code_begin] == '\n') ++code_begin;
  std::size_t opt_close_at = output.find(ControlTokens::opt_close, code_begin);
  std::string code;
  if (opt_close_at == std::string::npos) {
    code = output.substr(code_begin);  // truncated generation: keep the tail
    if (code.empty()) return parsed;
  } else {
    std::size_t code_end = opt_close_at;
    if (code_end > code_begin && output[code_end - 1] == '\n') --code_end;
    code = output.substr(code_begin, code_end - code_begin);
  }
  parsed.code = std::move(code);
  return parsed;
}

double lm_nll(std::span<const double> target_token_logprobs) {
  double sum = 0.0;
  for (double lp : target_token_logprobs) {
    if (std::isnan(lp) || lp > 0.0) {
      throw InputError("invalid log-probability " + std::to_string(lp) +
                       ": entries must be <= 0");
    }
    sum += lp;
  }
  return 0.0 - sum;  // keeps the empty case at +0.0
}

TrainingExample make_training_example(const std::string& instruction_template,
                                      const strategy::AnnotatedPair& pair) {
  TrainingExample out;
  out.instruction =
      prompts::render(instruction_template, {{"slow_code", pair.pair.slow.source_code}});
  out.slow_code = pair.pair.slow.source_code;
  out.target = pack(pair.strategies, pair.pair.fast.source_code);
  return out;
}

}  // namespace perfforge::serialize
