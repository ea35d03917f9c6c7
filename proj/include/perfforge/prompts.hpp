#pragma once

#include <map>
#include <string>

namespace perfforge::prompts {

// Prompt templates are versioned data files, one per role. Placeholders use
// {name} syntax; render() substitutes the provided values and rejects a
// template whose placeholders cannot all be resolved.
struct PromptTemplates {
  std::string single_step;
  std::string planner;
  std::string optimizer;   // interpolates {slow_code}, {strategies}
  std::string extractor;   // raw extraction: {slow_code}, {fast_code}
  std::string reextractor; // category-guided: {slow_code}, {fast_code}, {taxonomy}
  std::string classifier;  // {name}, {taxonomy}

  static PromptTemplates load_dir(const std::string& dir);
};

// Substitutes {key} occurrences; throws InputError when a known placeholder
// present in the template has no value. Braces that do not name a provided
// placeholder pass through untouched (code payloads contain braces).
std::string render(const std::string& templ, const std::map<std::string, std::string>& values);

}  // namespace perfforge::prompts
