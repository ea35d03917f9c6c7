#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perfforge/jsonl.hpp"

namespace perfforge::corpus {

enum class Verdict { accepted, failed, unknown };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct Submission {
  std::string user_id;
  std::string problem_id;
  std::uint64_t seq_index = 0;
  std::string source_code;
  std::optional<double> runtime_seconds;  // finite, >= 0 when present
  Verdict verdict = Verdict::unknown;
};

enum class PairOrigin { same_user, cross_user };

std::string to_string(PairOrigin o);
PairOrigin origin_from_string(const std::string& s);

struct CodePair {
  std::string pair_id;
  std::string problem_id;
  Submission slow;
  Submission fast;
  PairOrigin origin = PairOrigin::same_user;
};

// One user's ordered submission history for one problem.
struct Trajectory {
  std::string user_id;
  std::string problem_id;
  std::vector<Submission> submissions;  // ascending seq_index
};

// Submissions grouped into trajectories, ordered by (user_id, problem_id).
// Construction is stable under input permutation.
class Corpus {
 public:
  static Corpus build(std::vector<Submission> submissions);

  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  std::vector<std::string> problem_ids() const;
  std::size_t submission_count() const;

 private:
  std::vector<Trajectory> trajectories_;
};

inline constexpr double kDefaultMinSpeedup = 1.1;
inline constexpr double kDefaultReplacementFactor = 2.0;

// pair_id = fnv1a64 over (problem_id, slow user/seq, fast user/seq).
std::string make_pair_id(const std::string& problem_id, const Submission& slow,
                         const Submission& fast);

// Emits (earlier, final) pairs per trajectory: targets are restricted to the
// trajectory's last accepted submission, and an earlier accepted submission
// qualifies when t_earlier / t_final >= min_speedup. Non-accepted or
// unmeasured submissions are skipped.
std::vector<CodePair> final_pairs(const Corpus& corpus, double min_speedup = kDefaultMinSpeedup);

// Accepted submission with minimal runtime for the problem; ties broken by
// (user_id, seq_index). Absent when the problem has no measured accepted
// submission.
std::optional<Submission> global_best(const Corpus& corpus, const std::string& problem_id);

// Replaces pair.fast with `best` when fast's runtime strictly exceeds
// factor * best runtime; origin and pair_id are recomputed. Idempotent.
CodePair apply_global_best_replacement(const CodePair& pair, const Submission& best,
                                       double factor = kDefaultReplacementFactor);

json to_json(const Submission& s);
Submission submission_from_json(const json& j);
json to_json(const CodePair& p);
CodePair pair_from_json(const json& j);

}  // namespace perfforge::corpus
