#include "perfforge/sampling.hpp"

#include <algorithm>
#include <set>

#include "perfforge/errors.hpp"

namespace perfforge::sampling {

std::vector<std::string> distinct_categories(const strategy::AnnotatedPair& pair) {
  std::set<std::string> cats;
  for (const strategy::CategorizedStrategy& s : pair.strategies) cats.insert(s.category);
  return {cats.begin(), cats.end()};
}

FrequencyTable strategy_frequencies(const std::vector<strategy::AnnotatedPair>& pairs) {
  FrequencyTable freqs;
  for (const strategy::AnnotatedPair& p : pairs) {
    for (const std::string& c : distinct_categories(p)) ++freqs[c];
  }
  return freqs;
}

double rarity_score(const strategy::AnnotatedPair& pair, const FrequencyTable& freqs) {
  std::vector<std::string> cats = distinct_categories(pair);
  if (cats.empty()) throw InputError("rarity score undefined: pair " + pair.pair.pair_id +
                                     " carries no strategies");
  double sum = 0.0;
  for (const std::string& c : cats) {
    auto it = freqs.find(c);
    if (it == freqs.end() || it->second <= 0) {
      throw InputError("category '" + c + "' missing from frequency table");
    }
    sum += 1.0 / static_cast<double>(it->second);
  }
  return sum / static_cast<double>(cats.size());
}

BalancedSubset balanced_select(const std::vector<strategy::AnnotatedPair>& pairs,
                               std::int64_t budget, const FrequencyTable& freqs) {
  if (budget <= 0) throw UsageError("selection budget must be positive, got " +
                                    std::to_string(budget));

  struct Ranked {
    const strategy::AnnotatedPair* pair;
    double score;
  };
  std::map<std::string, std::vector<Ranked>> by_problem;
  for (const strategy::AnnotatedPair& p : pairs) {
    by_problem[p.pair.problem_id].push_back(Ranked{&p, rarity_score(p, freqs)});
  }
  for (auto& [problem, ranked] : by_problem) {
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.pair->pair.pair_id < b.pair->pair.pair_id;
    });
  }

  BalancedSubset out;
  std::map<std::string, std::size_t> cursor;
  std::size_t remaining = pairs.size();
  int round = 0;
  while (out.selected.size() < static_cast<std::size_t>(budget) && remaining > 0) {
    for (const auto& [problem, ranked] : by_problem) {
      std::size_t& pos = cursor[problem];
      if (pos >= ranked.size()) continue;  // exhausted problem
      out.selected.push_back(SelectedPair{*ranked[pos].pair, round});
      ++pos;
      --remaining;
      if (out.selected.size() >= static_cast<std::size_t>(budget)) break;
    }
    ++round;
  }
  return out;
}

std::map<std::string, double> category_distribution(
    const std::vector<strategy::AnnotatedPair>& pairs) {
  if (pairs.empty()) throw InputError("category distribution undefined for an empty corpus");
  std::map<std::string, std::int64_t> containing;
  for (const strategy::AnnotatedPair& p : pairs) {
    for (const std::string& c : distinct_categories(p)) ++containing[c];
  }
  std::map<std::string, double> out;
  for (const auto& [cat, n] : containing) {
    out[cat] = 100.0 * static_cast<double>(n) / static_cast<double>(pairs.size());
  }
  return out;
}

}  // namespace perfforge::sampling
