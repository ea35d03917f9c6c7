#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "perfforge/strategy.hpp"

namespace perfforge::sampling {

// category label -> incidence count; a category is counted once per pair even
// when it appears with several descs.
using FrequencyTable = std::map<std::string, std::int64_t>;

inline constexpr std::int64_t kDefaultBudget = 5000;

FrequencyTable strategy_frequencies(const std::vector<strategy::AnnotatedPair>& pairs);

// Distinct categories of one pair, sorted (k >= 1 after deduplication).
std::vector<std::string> distinct_categories(const strategy::AnnotatedPair& pair);

// Rarity-weighted score: arithmetic mean of reciprocal global frequencies over
// the pair's distinct categories. Bounded by 1 when every frequency >= 1.
double rarity_score(const strategy::AnnotatedPair& pair, const FrequencyTable& freqs);

struct SelectedPair {
  strategy::AnnotatedPair pair;
  int round = 0;  // selection round that picked this pair
};

struct BalancedSubset {
  std::vector<SelectedPair> selected;
};

// Ranks pairs per problem by descending rarity score (ties by ascending
// pair_id), then takes one pair per problem per round, problems in ascending
// problem_id order, until the budget or the corpus is exhausted. Frequencies
// are computed once by the caller and stay frozen during selection.
BalancedSubset balanced_select(const std::vector<strategy::AnnotatedPair>& pairs,
                               std::int64_t budget, const FrequencyTable& freqs);

// share of pairs containing each category, in percent; shares may sum above
// 100 since pairs carry multiple categories. Throws InputError when empty.
std::map<std::string, double> category_distribution(
    const std::vector<strategy::AnnotatedPair>& pairs);

}  // namespace perfforge::sampling
