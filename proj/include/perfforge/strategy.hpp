#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perfforge/chat_client.hpp"
#include "perfforge/corpus.hpp"
#include "perfforge/prompts.hpp"

namespace perfforge::strategy {

// Raw extracted technique: free-form name plus a rationale grounded in the
// slow code.
struct Strategy {
  std::string name;
  std::string desc;
};

struct Category {
  std::string label;
  std::string description;
};

inline constexpr std::size_t kTaxonomySize = 15;

// The fixed 15-category space. Ships as a versioned data file; labels are
// matched after normalization and reported in their canonical casing.
class CategoryTaxonomy {
 public:
  static CategoryTaxonomy from_records(std::vector<Category> categories);
  static CategoryTaxonomy load(const std::string& path);

  const std::vector<Category>& categories() const { return categories_; }

  // Canonical label for `name` when its normalized form equals a normalized
  // taxonomy label; nullopt otherwise.
  std::optional<std::string> match(const std::string& name) const;

  bool contains(const std::string& label) const { return match(label).has_value(); }

  std::string rendered() const;  // numbered "label: description" lines for prompts

 private:
  std::vector<Category> categories_;
  std::vector<std::string> normalized_;
};

struct CategorizedStrategy {
  std::string category;  // one of the 15 canonical labels
  std::string desc;
};

struct AnnotatedPair {
  corpus::CodePair pair;
  std::vector<CategorizedStrategy> strategies;  // k >= 1
};

// Case-folds, collapses whitespace runs, strips leading/trailing
// non-alphanumeric bytes. Throws InputError when nothing remains.
std::string normalize_name(const std::string& name);

// First occurrence per normalized name wins; input order preserved.
// Never throws: names that normalize to nothing share one representative.
std::vector<Strategy> dedup(const std::vector<Strategy>& strategies);

// Reply grammar shared by extraction and re-extraction:
//   CATEGORY: <label>
//   REASON: <desc>
// blocks in order; continuation lines of a REASON are joined with spaces.
// Throws ExtractionFormatError (carrying the raw reply) when no block parses.
std::vector<Strategy> parse_strategy_blocks(const std::string& reply);

std::vector<Strategy> extract_strategies(const corpus::CodePair& pair, chat::ChatClient& client,
                                         const prompts::PromptTemplates& templates);

// Taxonomy label (canonical casing) or nullopt for an answer outside the
// taxonomy. Matching is post-normalization exact match; no fuzzy matching.
std::optional<std::string> classify(const std::string& name, const CategoryTaxonomy& taxonomy,
                                    chat::ChatClient& client,
                                    const prompts::PromptTemplates& templates);

// classified / total. Throws InputError on an empty list.
double coverage_rate(const std::vector<bool>& classified);

AnnotatedPair reextract_with_categories(const corpus::CodePair& pair,
                                        const CategoryTaxonomy& taxonomy,
                                        chat::ChatClient& client,
                                        const prompts::PromptTemplates& templates);

struct AnnotateStats {
  std::size_t pairs_in = 0;
  std::size_t pairs_annotated = 0;
  std::size_t pairs_dropped = 0;  // grammar/taxonomy violations in the reply
  std::size_t strategies_total = 0;

  double drop_rate() const { return pairs_in == 0 ? 0.0 : double(pairs_dropped) / double(pairs_in); }
};

// Annotates a corpus with a bounded pool of concurrent client calls; output
// is merged by pair_id order regardless of completion order. Pairs whose
// replies fail the grammar or taxonomy are dropped and counted.
std::vector<AnnotatedPair> annotate_pairs(const std::vector<corpus::CodePair>& pairs,
                                          const CategoryTaxonomy& taxonomy,
                                          chat::ChatClient& client,
                                          const prompts::PromptTemplates& templates,
                                          int concurrency, AnnotateStats* stats = nullptr);

json to_json(const AnnotatedPair& p);
AnnotatedPair annotated_from_json(const json& j);

}  // namespace perfforge::strategy
