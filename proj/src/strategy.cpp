#include "perfforge/strategy.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "perfforge/errors.hpp"

namespace perfforge::strategy {

namespace {

bool ascii_alnum(unsigned char c) { return std::isalnum(c) != 0; }

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string normalize_name(const std::string& name) {
  std::string folded;
  folded.reserve(name.size());
  bool pending_space = false;
  for (unsigned char c : name) {
    if (std::isspace(c)) {
      pending_space = !folded.empty();
      continue;
    }
    if (pending_space) {
      folded += ' ';
      pending_space = false;
    }
    folded += static_cast<char>(std::tolower(c));
  }
  // strip leading/trailing punctuation (anything outside ASCII alphanumerics)
  std::size_t b = 0;
  while (b < folded.size() && !ascii_alnum(static_cast<unsigned char>(folded[b]))) ++b;
  std::size_t e = folded.size();
  while (e > b && !ascii_alnum(static_cast<unsigned char>(folded[e - 1]))) --e;
  std::string out = folded.substr(b, e - b);
  if (out.empty()) throw InputError("strategy name normalizes to nothing: '" + name + "'");
  return out;
}

std::vector<Strategy> dedup(const std::vector<Strategy>& strategies) {
  std::vector<Strategy> out;
  std::map<std::string, bool> seen;
  for (const Strategy& s : strategies) {
    std::string key;
    try {
      key = normalize_name(s.name);
    } catch (const InputError&) {
      key = "";  // all-punctuation names collapse onto one representative
    }
    if (seen.emplace(key, true).second) out.push_back(s);
  }
  return out;
}

CategoryTaxonomy CategoryTaxonomy::from_records(std::vector<Category> categories) {
  if (categories.size() != kTaxonomySize) {
    throw InputError("taxonomy must contain exactly " + std::to_string(kTaxonomySize) +
                     " categories, got " + std::to_string(categories.size()));
  }
  CategoryTaxonomy t;
  for (Category& c : categories) {
    std::string norm = normalize_name(c.label);
    if (std::find(t.normalized_.begin(), t.normalized_.end(), norm) != t.normalized_.end()) {
      throw InputError("duplicate taxonomy label: '" + c.label + "'");
    }
    t.normalized_.push_back(std::move(norm));
    t.categories_.push_back(std::move(c));
  }
  return t;
}

CategoryTaxonomy CategoryTaxonomy::load(const std::string& path) {
  JsonlFile file = read_jsonl(path);
  std::vector<Category> cats;
  for (const json& j : file.records) {
    try {
      cats.push_back(Category{j.at("label").get<std::string>(),
                              j.at("description").get<std::string>()});
    } catch (const json::exception& e) {
      throw InputError("malformed taxonomy record in " + path + ": " + e.what());
    }
  }
  return from_records(std::move(cats));
}

std::optional<std::string> CategoryTaxonomy::match(const std::string& name) const {
  std::string norm;
  try {
    norm = normalize_name(name);
  } catch (const InputError&) {
    return std::nullopt;
  }
  for (std::size_t i = 0; i < normalized_.size(); ++i) {
    if (normalized_[i] == norm) return categories_[i].label;
  }
  return std::nullopt;
}

std::string CategoryTaxonomy::rendered() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    out << (i + 1) << ". " << categories_[i].label << ": " << categories_[i].description << "\n";
  }
  return out.str();
}

std::vector<Strategy> parse_strategy_blocks(const std::string& reply) {
  std::vector<Strategy> out;
  std::istringstream in(reply);
  std::string line;
  std::optional<Strategy> current;
  bool in_reason = false;
  auto flush = [&] {
    if (!current) return;
    current->desc = strip(current->desc);
    if (!strip(current->name).empty() && !current->desc.empty()) out.push_back(*current);
    current.reset();
    in_reason = false;
  };
  while (std::getline(in, line)) {
    std::string trimmed = strip(line);
    if (trimmed.rfind("CATEGORY:", 0) == 0) {
      flush();
      current = Strategy{strip(trimmed.substr(9)), ""};
    } else if (trimmed.rfind("REASON:", 0) == 0) {
      if (current) {
        current->desc = strip(trimmed.substr(7));
        in_reason = true;
      }
    } else if (in_reason && current && !trimmed.empty()) {
      current->desc += ' ';
      current->desc += trimmed;  // continuation lines fold into one-line descs
    }
  }
  flush();
  if (out.empty()) {
    throw ExtractionFormatError("reply contains no CATEGORY/REASON block", reply);
  }
  return out;
}

std::vector<Strategy> extract_strategies(const corpus::CodePair& pair, chat::ChatClient& client,
                                         const prompts::PromptTemplates& templates) {
  std::string prompt = prompts::render(templates.extractor, {{"slow_code", pair.slow.source_code},
                                                             {"fast_code", pair.fast.source_code}});
  chat::ChatReply reply = client.complete({{"user", prompt}});
  return parse_strategy_blocks(reply.content);
}

std::optional<std::string> classify(const std::string& name, const CategoryTaxonomy& taxonomy,
                                    chat::ChatClient& client,
                                    const prompts::PromptTemplates& templates) {
  std::string prompt =
      prompts::render(templates.classifier, {{"name", name}, {"taxonomy", taxonomy.rendered()}});
  chat::ChatReply reply = client.complete({{"user", prompt}});
  return taxonomy.match(strip(reply.content));
}

double coverage_rate(const std::vector<bool>& classified) {
  if (classified.empty()) throw InputError("coverage rate undefined for an empty outcome list");
  std::size_t n = 0;
  for (bool b : classified) n += b ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(classified.size());
}

AnnotatedPair reextract_with_categories(const corpus::CodePair& pair,
                                        const CategoryTaxonomy& taxonomy,
                                        chat::ChatClient& client,
                                        const prompts::PromptTemplates& templates) {
  std::string prompt = prompts::render(templates.reextractor,
                                       {{"slow_code", pair.slow.source_code},
                                        {"fast_code", pair.fast.source_code},
                                        {"taxonomy", taxonomy.rendered()}});
  chat::ChatReply reply = client.complete({{"user", prompt}});
  std::vector<Strategy> raw = parse_strategy_blocks(reply.content);
  AnnotatedPair out;
  out.pair = pair;
  for (const Strategy& s : raw) {
    std::optional<std::string> label = taxonomy.match(s.name);
    if (!label) {
      throw ExtractionFormatError("re-extraction produced out-of-taxonomy category: '" + s.name +
                                      "'",
                                  reply.content);
    }
    out.strategies.push_back(CategorizedStrategy{*label, s.desc});
  }
  if (out.strategies.empty()) {
    throw ExtractionFormatError("re-extraction produced no strategies", reply.content);
  }
  return out;
}

std::vector<AnnotatedPair> annotate_pairs(const std::vector<corpus::CodePair>& pairs,
                                          const CategoryTaxonomy& taxonomy,
                                          chat::ChatClient& client,
                                          const prompts::PromptTemplates& templates,
                                          int concurrency, AnnotateStats* stats) {
  if (concurrency < 1) throw UsageError("annotate concurrency must be >= 1");
  std::vector<std::optional<AnnotatedPair>> slots(pairs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> dropped{0};
  std::mutex error_mu;
  std::exception_ptr fatal;

  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= pairs.size()) return;
      try {
        slots[i] = reextract_with_categories(pairs[i], taxonomy, client, templates);
      } catch (const ExtractionFormatError&) {
        dropped.fetch_add(1);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!fatal) fatal = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  const std::size_t n_threads =
      std::min(static_cast<std::size_t>(concurrency), std::max<std::size_t>(pairs.size(), 1));
  threads.reserve(n_threads);
  for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
  if (fatal) std::rethrow_exception(fatal);

  std::vector<AnnotatedPair> out;
  for (std::optional<AnnotatedPair>& slot : slots) {
    if (slot) out.push_back(std::move(*slot));
  }
  std::sort(out.begin(), out.end(), [](const AnnotatedPair& a, const AnnotatedPair& b) {
    return a.pair.pair_id < b.pair.pair_id;
  });
  if (stats) {
    stats->pairs_in = pairs.size();
    stats->pairs_annotated = out.size();
    stats->pairs_dropped = dropped.load();
    stats->strategies_total = 0;
    for (const AnnotatedPair& p : out) stats->strategies_total += p.strategies.size();
  }
  return out;
}

json to_json(const AnnotatedPair& p) {
  json j;
  j["pair_id"] = p.pair.pair_id;
  j["problem_id"] = p.pair.problem_id;
  j["origin"] = corpus::to_string(p.pair.origin);
  j["slow"] = corpus::to_json(p.pair.slow);
  j["fast"] = corpus::to_json(p.pair.fast);
  json strategies = json::array();
  for (const CategorizedStrategy& s : p.strategies) {
    strategies.push_back(json{{"category", s.category}, {"desc", s.desc}});
  }
  j["strategies"] = strategies;
  return j;
}

AnnotatedPair annotated_from_json(const json& j) {
  AnnotatedPair p;
  p.pair = corpus::pair_from_json(j);
  try {
    for (const json& s : j.at("strategies")) {
      p.strategies.push_back(CategorizedStrategy{s.at("category").get<std::string>(),
                                                 s.at("desc").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw InputError("malformed annotated pair " + p.pair.pair_id + ": " + e.what());
  }
  if (p.strategies.empty()) {
    throw InputError("annotated pair " + p.pair.pair_id + " has no strategies");
  }
  return p;
}

}  // namespace perfforge::strategy
