#include <doctest.h>

#include <algorithm>
#include <random>

#include "perfforge/corpus.hpp"
#include "perfforge/errors.hpp"
#include "test_support.hpp"

using namespace perfforge;
using testing_support::make_submission;

TEST_CASE("build_trajectories orders by seq_index regardless of input order") {
  std::vector<corpus::Submission> subs = {
      make_submission("u1", "p1", 2, 4.0),
      make_submission("u1", "p1", 0, 10.0),
      make_submission("u1", "p1", 1, 6.0),
  };
  corpus::Corpus c = corpus::Corpus::build(subs);
  REQUIRE(c.trajectories().size() == 1);
  const corpus::Trajectory& t = c.trajectories()[0];
  CHECK(t.submissions[0].seq_index == 0);
  CHECK(t.submissions[1].seq_index == 1);
  CHECK(t.submissions[2].seq_index == 2);
}

TEST_CASE("build_trajectories: empty input, multiple users, duplicates") {
  CHECK(corpus::Corpus::build({}).trajectories().empty());

  corpus::Corpus two = corpus::Corpus::build(
      {make_submission("u1", "p1", 0, 1.0), make_submission("u2", "p1", 0, 2.0)});
  CHECK(two.trajectories().size() == 2);

  CHECK_THROWS_AS(corpus::Corpus::build({make_submission("u1", "p1", 0, 1.0),
                                         make_submission("u1", "p1", 0, 2.0)}),
                  InputError);
  try {
    corpus::Corpus::build(
        {make_submission("u1", "p1", 3, 1.0), make_submission("u1", "p1", 3, 2.0)});
    FAIL("expected duplicate-key rejection");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("u1") != std::string::npos);
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("build_trajectories is permutation invariant") {
  std::vector<corpus::Submission> subs;
  for (int u = 0; u < 4; ++u) {
    for (int p = 0; p < 3; ++p) {
      for (int i = 0; i < 5; ++i) {
        subs.push_back(make_submission("u" + std::to_string(u), "p" + std::to_string(p),
                                       static_cast<std::uint64_t>(i), 1.0 + i));
      }
    }
  }
  corpus::Corpus reference = corpus::Corpus::build(subs);
  std::mt19937 rng(42);
  for (int round = 0; round < 10; ++round) {
    std::shuffle(subs.begin(), subs.end(), rng);
    corpus::Corpus shuffled = corpus::Corpus::build(subs);
    REQUIRE(shuffled.trajectories().size() == reference.trajectories().size());
    for (std::size_t i = 0; i < reference.trajectories().size(); ++i) {
      CHECK(shuffled.trajectories()[i].user_id == reference.trajectories()[i].user_id);
      CHECK(shuffled.trajectories()[i].problem_id == reference.trajectories()[i].problem_id);
      REQUIRE(shuffled.trajectories()[i].submissions.size() ==
              reference.trajectories()[i].submissions.size());
      for (std::size_t k = 0; k < reference.trajectories()[i].submissions.size(); ++k) {
        CHECK(shuffled.trajectories()[i].submissions[k].seq_index ==
              reference.trajectories()[i].submissions[k].seq_index);
      }
    }
  }
}

TEST_CASE("final_pairs targets only the final submission") {
  corpus::Corpus c = corpus::Corpus::build({
      make_submission("u1", "p1", 0, 10.0),
      make_submission("u1", "p1", 1, 6.0),
      make_submission("u1", "p1", 2, 4.0),
  });
  std::vector<corpus::CodePair> pairs = corpus::final_pairs(c);
  REQUIRE(pairs.size() == 2);
  for (const corpus::CodePair& p : pairs) {
    CHECK(p.fast.seq_index == 2);
    CHECK(p.origin == corpus::PairOrigin::same_user);
  }
  CHECK(pairs[0].slow.runtime_seconds == 10.0);
  CHECK(pairs[1].slow.runtime_seconds == 6.0);
}

TEST_CASE("final_pairs honors the min-speedup threshold") {
  corpus::Corpus c = corpus::Corpus::build({
      make_submission("u1", "p1", 0, 4.0),
      make_submission("u1", "p1", 1, 3.8),
  });
  CHECK(corpus::final_pairs(c, 1.1).empty());
  CHECK(corpus::final_pairs(c, 1.05).size() == 1);
}

TEST_CASE("final_pairs skips non-accepted and unmeasured submissions") {
  corpus::Submission failed = make_submission("u1", "p1", 1, 0.5);
  failed.verdict = corpus::Verdict::failed;
  corpus::Submission unmeasured = make_submission("u1", "p1", 2, 0.0);
  unmeasured.runtime_seconds.reset();
  corpus::Corpus c = corpus::Corpus::build({
      make_submission("u1", "p1", 0, 10.0),
      failed,
      unmeasured,
      make_submission("u1", "p1", 3, 2.0),
  });
  std::vector<corpus::CodePair> pairs = corpus::final_pairs(c);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].slow.seq_index == 0);
  CHECK(pairs[0].fast.seq_index == 3);
}

TEST_CASE("global_best picks minimal runtime with lexicographic tie-break") {
  corpus::Corpus c = corpus::Corpus::build({
      make_submission("u1", "p1", 0, 2.0),
      make_submission("u2", "p1", 0, 1.5),
      make_submission("u3", "p1", 0, 3.0),
  });
  auto best = corpus::global_best(c, "p1");
  REQUIRE(best.has_value());
  CHECK(best->user_id == "u2");

  corpus::Corpus tie = corpus::Corpus::build({
      make_submission("u2", "p1", 0, 2.0),
      make_submission("u1", "p1", 0, 2.0),
  });
  CHECK(corpus::global_best(tie, "p1")->user_id == "u1");

  corpus::Submission rejected = make_submission("u1", "p2", 0, 1.0);
  rejected.verdict = corpus::Verdict::failed;
  corpus::Corpus none = corpus::Corpus::build({rejected});
  CHECK_FALSE(corpus::global_best(none, "p2").has_value());
}

TEST_CASE("global-best replacement is strict and recomputes origin") {
  corpus::CodePair pair = testing_support::make_pair("p1", "", 10.0, 5.0);
  pair.pair_id = corpus::make_pair_id(pair.problem_id, pair.slow, pair.fast);
  corpus::Submission best = make_submission("u9", "p1", 4, 2.0, "best code");

  corpus::CodePair replaced = corpus::apply_global_best_replacement(pair, best);
  CHECK(replaced.fast.user_id == "u9");
  CHECK(replaced.origin == corpus::PairOrigin::cross_user);
  CHECK(replaced.pair_id != pair.pair_id);

  // boundary: 4.0 > 2*2.0 is false, the user's final code stays
  corpus::CodePair boundary = testing_support::make_pair("p1", "x", 10.0, 4.0);
  corpus::CodePair kept = corpus::apply_global_best_replacement(boundary, best);
  CHECK(kept.fast.user_id == "u1");
  CHECK(kept.origin == corpus::PairOrigin::same_user);

  CHECK_THROWS_AS(corpus::apply_global_best_replacement(pair, best, 1.0), UsageError);
  CHECK_THROWS_AS(corpus::apply_global_best_replacement(pair, best, 0.5), UsageError);
}

TEST_CASE("global-best replacement is idempotent and bounded") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> runtime(0.1, 20.0);
  for (int i = 0; i < 200; ++i) {
    corpus::CodePair pair = testing_support::make_pair("p1", "id", runtime(rng), runtime(rng));
    corpus::Submission best = make_submission("u9", "p1", 4, runtime(rng));
    corpus::CodePair once = corpus::apply_global_best_replacement(pair, best);
    corpus::CodePair twice = corpus::apply_global_best_replacement(once, best);
    CHECK(once.pair_id == twice.pair_id);
    CHECK(once.fast.user_id == twice.fast.user_id);
    CHECK(*once.fast.runtime_seconds == *twice.fast.runtime_seconds);
    CHECK(*once.fast.runtime_seconds <=
          std::max(*pair.fast.runtime_seconds, *best.runtime_seconds));
    const bool same_user = once.slow.user_id == once.fast.user_id;
    CHECK((once.origin == corpus::PairOrigin::same_user) == same_user);
  }
}

TEST_CASE("submission json round-trip and validation") {
  corpus::Submission s = make_submission("u1", "p1", 3, 1.25, "code\nwith\nlines");
  corpus::Submission back = corpus::submission_from_json(corpus::to_json(s));
  CHECK(back.user_id == s.user_id);
  CHECK(back.seq_index == 3);
  CHECK(back.source_code == s.source_code);
  CHECK(*back.runtime_seconds == 1.25);

  json bad = corpus::to_json(s);
  bad["runtime_seconds"] = -1.0;
  CHECK_THROWS_AS(corpus::submission_from_json(bad), InputError);
  bad["runtime_seconds"] = nullptr;
  CHECK_FALSE(corpus::submission_from_json(bad).runtime_seconds.has_value());
}
