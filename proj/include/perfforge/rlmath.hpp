#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfforge/evalbench.hpp"
#include "perfforge/strategy.hpp"

namespace perfforge::rlmath {

enum class IncorrectPolicy { as_regression, as_compile_failure };

struct RewardConfig {
  double omega = 100.0;
  IncorrectPolicy incorrect_policy = IncorrectPolicy::as_regression;

  void validate() const;
};

struct GrpoConfig {
  int group_size = 4;                    // G
  double clip_epsilon = 0.2;             // in (0, 1)
  double kl_beta = 0.04;                 // >= 0
  double degenerate_std_epsilon = 1e-8;

  void validate() const;
};

// Delta = t_slow / t_gen.
double speedup_factor(double t_slow, double t_gen);

// Piecewise reward: -omega when uncompilable; compiled-but-incorrect per
// policy (regression -1 by default); correct with Delta < 1 -> -1; correct
// with Delta >= 1 -> Delta^2. Range {-omega} U {-1} U [1, inf).
double reward(const evalbench::EvalResult& eval, double t_slow, const RewardConfig& config);

// A_i = (R_i - mean) / population std; all zeros when std < eps (no update
// signal from a degenerate group).
std::vector<double> group_advantages(std::span<const double> rewards, double eps = 1e-8);

// rho = exp(logp_new - logp_old); min(rho*A, clip(rho, 1-eps, 1+eps)*A).
double clipped_surrogate_term(double logp_new, double logp_old, double advantage, double eps);

// Per-token estimator r - log r - 1 with r = exp(logp_ref - logp_new);
// nonnegative, zero iff the log-probs agree.
double kl_penalty_term(double logp_new, double logp_ref);

// Aligned per-token log-prob sequences for one group member.
struct MemberLogprobs {
  std::vector<double> logp_new;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;
};

struct GroupMember {
  int index = 0;
  std::vector<strategy::CategorizedStrategy> strategies;
  std::string generated_code;
  std::optional<evalbench::EvalResult> eval;
  std::optional<std::string> error;  // malformed generation, recorded not raised
  double reward = 0.0;
  double advantage = 0.0;
  MemberLogprobs logprobs;
};

struct GroupSample {
  std::string id;
  std::string problem_id;
  std::string slow_code;
  double t_slow = 0.0;
  std::vector<GroupMember> members;  // size G
};

// Token-mean per member, then mean over members, of the clipped surrogate,
// minus kl_beta times the same double mean of the KL estimator. Advantages
// are taken from the members (computed from their own rewards).
double grpo_objective(const GroupSample& group, const GrpoConfig& config);

json to_json(const GroupSample& g);
GroupSample group_from_json(const json& j);

}  // namespace perfforge::rlmath
