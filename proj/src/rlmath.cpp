#include "perfforge/rlmath.hpp"

#include <algorithm>
#include <cmath>

#include "perfforge/errors.hpp"

namespace perfforge::rlmath {

void RewardConfig::validate() const {
  if (!(omega > 0) || !std::isfinite(omega)) throw UsageError("omega must be positive and finite");
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw UsageError("group size must be >= 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw UsageError("clip epsilon must lie in (0, 1)");
  }
  if (!(kl_beta >= 0.0) || !std::isfinite(kl_beta)) throw UsageError("kl beta must be >= 0");
  if (!(degenerate_std_epsilon > 0.0)) throw UsageError("degenerate std epsilon must be > 0");
}

double speedup_factor(double t_slow, double t_gen) {
  if (!(t_slow > 0) || !std::isfinite(t_slow) || !(t_gen > 0) || !std::isfinite(t_gen)) {
    throw InputError("invalid measurement: speedup factor requires positive finite runtimes");
  }
  return t_slow / t_gen;
}

double reward(const evalbench::EvalResult& eval, double t_slow, const RewardConfig& config) {
  config.validate();
  if (!eval.compiled) return -config.omega;
  if (!eval.correct) {
    return config.incorrect_policy == IncorrectPolicy::as_compile_failure ? -config.omega : -1.0;
  }
  if (!eval.runtime_seconds) {
    throw InputError("correct result is missing its measured runtime");
  }
  const double delta = speedup_factor(t_slow, *eval.runtime_seconds);
  if (delta < 1.0) return -1.0;
  return delta * delta;
}

std::vector<double> group_advantages(std::span<const double> rewards, double eps) {
  if (rewards.size() < 2) throw InputError("advantage normalization requires a group of >= 2");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;  // population variance: G is small and fixed
  const double std = std::sqrt(var);
  std::vector<double> out(rewards.size(), 0.0);
  if (std < eps) return out;  // uninformative group, no update signal
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / std;
  return out;
}

double clipped_surrogate_term(double logp_new, double logp_old, double advantage, double eps) {
  if (!std::isfinite(logp_new) || !std::isfinite(logp_old) || !std::isfinite(advantage)) {
    throw InputError("clipped surrogate requires finite inputs");
  }
  if (!(eps > 0.0 && eps < 1.0)) throw UsageError("clip epsilon must lie in (0, 1)");
  const double rho = std::exp(logp_new - logp_old);
  if (!std::isfinite(rho)) throw InputError("numeric overflow: probability ratio is not finite");
  const double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
  return std::min(rho * advantage, clipped * advantage);
}

double kl_penalty_term(double logp_new, double logp_ref) {
  if (!std::isfinite(logp_new) || !std::isfinite(logp_ref)) {
    throw InputError("kl penalty requires finite inputs");
  }
  const double d = logp_ref - logp_new;  // log r
  const double r = std::exp(d);
  if (!std::isfinite(r)) throw InputError("numeric overflow: reference ratio is not finite");
  // r - log r - 1, written as expm1(d) - d for stability near r = 1
  return std::expm1(d) - d;
}

double grpo_objective(const GroupSample& group, const GrpoConfig& config) {
  config.validate();
  if (group.members.size() < 2) throw InputError("grpo objective requires a group of >= 2");
  double surrogate_sum = 0.0;
  double kl_sum = 0.0;
  for (const GroupMember& m : group.members) {
    const MemberLogprobs& lp = m.logprobs;
    if (lp.logp_new.size() != lp.logp_old.size() || lp.logp_new.size() != lp.logp_ref.size()) {
      throw InputError("member " + std::to_string(m.index) +
                       ": new/old/ref log-prob sequences are not aligned");
    }
    if (lp.logp_new.empty()) {
      throw InputError("member " + std::to_string(m.index) + ": empty log-prob sequence");
    }
    double member_surrogate = 0.0;
    double member_kl = 0.0;
    for (std::size_t t = 0; t < lp.logp_new.size(); ++t) {
      member_surrogate += clipped_surrogate_term(lp.logp_new[t], lp.logp_old[t], m.advantage,
                                                 config.clip_epsilon);
      member_kl += kl_penalty_term(lp.logp_new[t], lp.logp_ref[t]);
    }
    const double tokens = static_cast<double>(lp.logp_new.size());
    surrogate_sum += member_surrogate / tokens;
    kl_sum += member_kl / tokens;
  }
  const double g = static_cast<double>(group.members.size());
  return surrogate_sum / g - config.kl_beta * (kl_sum / g);
}

json to_json(const GroupSample& g) {
  json j;
  j["id"] = g.id;
  j["problem_id"] = g.problem_id;
  j["slow_code"] = g.slow_code;
  j["t_slow"] = g.t_slow;
  json members = json::array();
  for (const GroupMember& m : g.members) {
    json mj;
    mj["index"] = m.index;
    json strategies = json::array();
    for (const strategy::CategorizedStrategy& s : m.strategies) {
      strategies.push_back(json{{"category", s.category}, {"desc", s.desc}});
    }
    mj["strategies"] = strategies;
    mj["generated_code"] = m.generated_code;
    mj["eval"] = m.eval ? evalbench::to_json(*m.eval) : json(nullptr);
    mj["error"] = m.error ? json(*m.error) : json(nullptr);
    mj["reward"] = m.reward;
    mj["advantage"] = m.advantage;
    if (!m.logprobs.logp_new.empty()) {
      mj["logprobs"] = json{{"new", m.logprobs.logp_new},
                            {"old", m.logprobs.logp_old},
                            {"ref", m.logprobs.logp_ref}};
    }
    members.push_back(std::move(mj));
  }
  j["members"] = members;
  return j;
}

GroupSample group_from_json(const json& j) {
  GroupSample g;
  try {
    g.id = j.at("id").get<std::string>();
    g.problem_id = j.value("problem_id", "");
    g.slow_code = j.value("slow_code", "");
    g.t_slow = j.value("t_slow", 0.0);
    for (const json& mj : j.at("members")) {
      GroupMember m;
      m.index = mj.at("index").get<int>();
      if (mj.contains("strategies")) {
        for (const json& s : mj.at("strategies")) {
          m.strategies.push_back(strategy::CategorizedStrategy{
              s.at("category").get<std::string>(), s.at("desc").get<std::string>()});
        }
      }
      m.generated_code = mj.value("generated_code", "");
      if (mj.contains("eval") && !mj.at("eval").is_null()) {
        m.eval = evalbench::result_from_json(mj.at("eval"));
      }
      if (mj.contains("error") && !mj.at("error").is_null()) {
        m.error = mj.at("error").get<std::string>();
      }
      m.reward = mj.value("reward", 0.0);
      m.advantage = mj.value("advantage", 0.0);
      if (mj.contains("logprobs")) {
        m.logprobs.logp_new = mj.at("logprobs").at("new").get<std::vector<double>>();
        m.logprobs.logp_old = mj.at("logprobs").at("old").get<std::vector<double>>();
        m.logprobs.logp_ref = mj.at("logprobs").at("ref").get<std::vector<double>>();
      }
      g.members.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed group sample record: ") + e.what());
  }
  return g;
}

}  // namespace perfforge::rlmath
