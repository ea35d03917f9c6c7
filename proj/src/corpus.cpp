#include "perfforge/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "perfforge/errors.hpp"
#include "perfforge/hash.hpp"

namespace perfforge::corpus {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::accepted: return "accepted";
    case Verdict::failed: return "failed";
    case Verdict::unknown: return "unknown";
  }
  return "unknown";
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "accepted") return Verdict::accepted;
  if (s == "failed") return Verdict::failed;
  if (s == "unknown") return Verdict::unknown;
  throw InputError("unknown verdict: '" + s + "'");
}

std::string to_string(PairOrigin o) {
  return o == PairOrigin::same_user ? "same_user" : "cross_user";
}

PairOrigin origin_from_string(const std::string& s) {
  if (s == "same_user") return PairOrigin::same_user;
  if (s == "cross_user") return PairOrigin::cross_user;
  throw InputError("unknown pair origin: '" + s + "'");
}

namespace {

void validate_runtime(const Submission& s) {
  if (s.runtime_seconds && (!std::isfinite(*s.runtime_seconds) || *s.runtime_seconds < 0)) {
    throw InputError("submission (" + s.user_id + ", " + s.problem_id + ", " +
                     std::to_string(s.seq_index) + ") has non-finite or negative runtime");
  }
}

bool measured_accepted(const Submission& s) {
  return s.verdict == Verdict::accepted && s.runtime_seconds.has_value();
}

}  // namespace

Corpus Corpus::build(std::vector<Submission> submissions) {
  for (const Submission& s : submissions) validate_runtime(s);
  std::sort(submissions.begin(), submissions.end(), [](const Submission& a, const Submission& b) {
    return std::tie(a.user_id, a.problem_id, a.seq_index) <
           std::tie(b.user_id, b.problem_id, b.seq_index);
  });
  Corpus out;
  for (Submission& s : submissions) {
    Trajectory* t = out.trajectories_.empty() ? nullptr : &out.trajectories_.back();
    if (t == nullptr || t->user_id != s.user_id || t->problem_id != s.problem_id) {
      out.trajectories_.push_back(Trajectory{s.user_id, s.problem_id, {}});
      t = &out.trajectories_.back();
    } else if (!t->submissions.empty() && t->submissions.back().seq_index == s.seq_index) {
      throw InputError("duplicate submission key (" + s.user_id + ", " + s.problem_id + ", " +
                       std::to_string(s.seq_index) + ")");
    }
    t->submissions.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> Corpus::problem_ids() const {
  std::set<std::string> ids;
  for (const Trajectory& t : trajectories_) ids.insert(t.problem_id);
  return {ids.begin(), ids.end()};
}

std::size_t Corpus::submission_count() const {
  std::size_t n = 0;
  for (const Trajectory& t : trajectories_) n += t.submissions.size();
  return n;
}

std::string make_pair_id(const std::string& problem_id, const Submission& slow,
                         const Submission& fast) {
  std::string key = problem_id + '\x1f' + slow.user_id + '\x1e' + std::to_string(slow.seq_index) +
                    '\x1f' + fast.user_id + '\x1e' + std::to_string(fast.seq_index);
  return fnv1a64_hex(key);
}

std::vector<CodePair> final_pairs(const Corpus& corpus, double min_speedup) {
  std::vector<CodePair> pairs;
  for (const Trajectory& t : corpus.trajectories()) {
    std::vector<const Submission*> accepted;
    for (const Submission& s : t.submissions) {
      if (measured_accepted(s)) accepted.push_back(&s);
    }
    if (accepted.size() < 2) continue;
    const Submission& final = *accepted.back();
    for (std::size_t i = 0; i + 1 < accepted.size(); ++i) {
      const Submission& earlier = *accepted[i];
      if (*earlier.runtime_seconds / *final.runtime_seconds >= min_speedup) {
        CodePair p;
        p.problem_id = t.problem_id;
        p.slow = earlier;
        p.fast = final;
        p.origin = PairOrigin::same_user;
        p.pair_id = make_pair_id(t.problem_id, earlier, final);
        pairs.push_back(std::move(p));
      }
    }
  }
  return pairs;
}

std::optional<Submission> global_best(const Corpus& corpus, const std::string& problem_id) {
  const Submission* best = nullptr;
  for (const Trajectory& t : corpus.trajectories()) {
    if (t.problem_id != problem_id) continue;
    for (const Submission& s : t.submissions) {
      if (!measured_accepted(s)) continue;
      if (best == nullptr || *s.runtime_seconds < *best->runtime_seconds ||
          (*s.runtime_seconds == *best->runtime_seconds &&
           std::tie(s.user_id, s.seq_index) < std::tie(best->user_id, best->seq_index))) {
        best = &s;
      }
    }
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

CodePair apply_global_best_replacement(const CodePair& pair, const Submission& best,
                                       double factor) {
  if (!(factor > 1.0)) {
    throw UsageError("global-best replacement factor must be > 1, got " + std::to_string(factor));
  }
  if (!pair.fast.runtime_seconds || !best.runtime_seconds) {
    throw InputError("global-best replacement requires measured runtimes (pair " + pair.pair_id +
                     ")");
  }
  if (!(*pair.fast.runtime_seconds > factor * *best.runtime_seconds)) return pair;
  CodePair out = pair;
  out.fast = best;
  out.origin =
      out.slow.user_id == out.fast.user_id ? PairOrigin::same_user : PairOrigin::cross_user;
  out.pair_id = make_pair_id(out.problem_id, out.slow, out.fast);
  return out;
}

json to_json(const Submission& s) {
  json j;
  j["user_id"] = s.user_id;
  j["problem_id"] = s.problem_id;
  j["seq_index"] = s.seq_index;
  j["source_code"] = s.source_code;
  if (s.runtime_seconds) {
    j["runtime_seconds"] = *s.runtime_seconds;
  } else {
    j["runtime_seconds"] = nullptr;
  }
  j["verdict"] = to_string(s.verdict);
  return j;
}

Submission submission_from_json(const json& j) {
  Submission s;
  try {
    s.user_id = j.at("user_id").get<std::string>();
    s.problem_id = j.at("problem_id").get<std::string>();
    s.seq_index = j.at("seq_index").get<std::uint64_t>();
    s.source_code = j.at("source_code").get<std::string>();
    if (j.contains("runtime_seconds") && !j.at("runtime_seconds").is_null()) {
      s.runtime_seconds = j.at("runtime_seconds").get<double>();
    }
    if (j.contains("verdict")) s.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed submission record: ") + e.what());
  }
  validate_runtime(s);
  return s;
}

json to_json(const CodePair& p) {
  json j;
  j["pair_id"] = p.pair_id;
  j["problem_id"] = p.problem_id;
  j["origin"] = to_string(p.origin);
  j["slow"] = to_json(p.slow);
  j["fast"] = to_json(p.fast);
  return j;
}

CodePair pair_from_json(const json& j) {
  CodePair p;
  try {
    p.pair_id = j.at("pair_id").get<std::string>();
    p.problem_id = j.at("problem_id").get<std::string>();
    p.origin = origin_from_string(j.at("origin").get<std::string>());
    p.slow = submission_from_json(j.at("slow"));
    p.fast = submission_from_json(j.at("fast"));
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed pair record: ") + e.what());
  }
  if (p.slow.problem_id != p.problem_id || p.fast.problem_id != p.problem_id) {
    throw InputError("pair " + p.pair_id + ": member problem_id does not match pair problem_id");
  }
  return p;
}

}  // namespace perfforge::corpus
