#include "perfforge/prompts.hpp"

#include <array>
#include <filesystem>

#include "perfforge/errors.hpp"
#include "perfforge/jsonl.hpp"

namespace perfforge::prompts {

namespace {

constexpr std::array<const char*, 5> kKnownPlaceholders = {"slow_code", "fast_code", "taxonomy",
                                                           "strategies", "name"};

bool is_known(const std::string& key) {
  for (const char* k : kKnownPlaceholders) {
    if (key == k) return true;
  }
  return false;
}

}  // namespace

std::string render(const std::string& templ, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(templ.size());
  std::size_t i = 0;
  while (i < templ.size()) {
    if (templ[i] == '{') {
      std::size_t close = templ.find('}', i + 1);
      if (close != std::string::npos) {
        std::string key = templ.substr(i + 1, close - i - 1);
        auto it = values.find(key);
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
        if (is_known(key)) {
          throw InputError("prompt template placeholder {" + key + "} has no value");
        }
      }
    }
    out += templ[i];
    ++i;
  }
  return out;
}

PromptTemplates PromptTemplates::load_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  auto load = [&](const char* name) {
    fs::path p = fs::path(dir) / (std::string(name) + ".txt");
    if (!fs::exists(p)) throw InputError("missing prompt template: " + p.string());
    return read_file(p.string());
  };
  PromptTemplates t;
  t.single_step = load("single_step");
  t.planner = load("planner");
  t.optimizer = load("optimizer");
  t.extractor = load("extractor");
  t.reextractor = load("reextractor");
  t.classifier = load("classifier");
  return t;
}

}  // namespace perfforge::prompts
