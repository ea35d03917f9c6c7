#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "perfforge/evalbench.hpp"
#include "perfforge/rlmath.hpp"
#include "perfforge/sampling.hpp"
#include "perfforge/serialize.hpp"
#include "perfforge/strategy.hpp"
#include "perfforge/version.hpp"

namespace py = pybind11;
namespace pf = perfforge;

namespace {

std::vector<pf::strategy::CategorizedStrategy> to_strategies(
    const std::vector<std::pair<std::string, std::string>>& items) {
  std::vector<pf::strategy::CategorizedStrategy> out;
  out.reserve(items.size());
  for (const auto& [category, desc] : items) {
    out.push_back(pf::strategy::CategorizedStrategy{category, desc});
  }
  return out;
}

py::dict parsed_to_dict(const pf::serialize::ParsedOutput& parsed) {
  py::list strategies;
  for (const auto& s : parsed.strategies) {
    strategies.append(py::make_tuple(s.category, s.desc));
  }
  py::dict out;
  out["strategies"] = strategies;
  out["code"] = parsed.code ? py::object(py::str(*parsed.code)) : py::object(py::none());
  return out;
}

double py_reward(bool compiled, bool correct, std::optional<double> runtime_seconds,
                 double t_slow, double omega, bool incorrect_as_compile_failure) {
  pf::evalbench::EvalResult eval;
  eval.compiled = compiled;
  eval.correct = correct;
  eval.runtime_seconds = runtime_seconds;
  pf::rlmath::RewardConfig config;
  config.omega = omega;
  config.incorrect_policy = incorrect_as_compile_failure
                                ? pf::rlmath::IncorrectPolicy::as_compile_failure
                                : pf::rlmath::IncorrectPolicy::as_regression;
  return pf::rlmath::reward(eval, t_slow, config);
}

double py_rarity_score(const std::vector<std::string>& categories,
                       const std::map<std::string, std::int64_t>& freqs) {
  pf::strategy::AnnotatedPair pair;
  for (const std::string& c : categories) {
    pair.strategies.push_back(pf::strategy::CategorizedStrategy{c, "-"});
  }
  return pf::sampling::rarity_score(pair, freqs);
}

double py_grpo_objective(
    const std::vector<std::tuple<std::vector<double>, std::vector<double>, std::vector<double>,
                                 double>>& members,
    double eps, double beta) {
  pf::rlmath::GroupSample group;
  int index = 0;
  for (const auto& [lp_new, lp_old, lp_ref, advantage] : members) {
    pf::rlmath::GroupMember m;
    m.index = index++;
    m.logprobs.logp_new = lp_new;
    m.logprobs.logp_old = lp_old;
    m.logprobs.logp_ref = lp_ref;
    m.advantage = advantage;
    group.members.push_back(std::move(m));
  }
  pf::rlmath::GrpoConfig config;
  config.clip_epsilon = eps;
  config.kl_beta = beta;
  config.group_size = std::max<int>(2, static_cast<int>(group.members.size()));
  return pf::rlmath::grpo_objective(group, config);
}

}  // namespace

PYBIND11_MODULE(_perfforge, m) {
  m.doc() = "perfforge core operations";
  m.attr("__version__") = pf::kVersion;

  m.def("normalize_name", &pf::strategy::normalize_name, py::arg("name"),
        "Canonical key for a strategy name: case-folded, whitespace-collapsed, "
        "edge punctuation stripped.");

  m.def(
      "dedup_names",
      [](const std::vector<std::pair<std::string, std::string>>& strategies) {
        std::vector<pf::strategy::Strategy> in;
        in.reserve(strategies.size());
        for (const auto& [name, desc] : strategies) {
          in.push_back(pf::strategy::Strategy{name, desc});
        }
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& s : pf::strategy::dedup(in)) out.emplace_back(s.name, s.desc);
        return out;
      },
      py::arg("strategies"), "First occurrence per normalized name wins.");

  m.def(
      "pack",
      [](const std::vector<std::pair<std::string, std::string>>& strategies,
         const std::string& code) { return pf::serialize::pack(to_strategies(strategies), code); },
      py::arg("strategies"), py::arg("code"),
      "Packs (category, desc) strategies and code into the control-token target.");

  m.def(
      "unpack",
      [](const std::string& output, const std::string& mode, bool strict) {
        pf::serialize::ParseMode parse_mode = mode == "plan_only"
                                                  ? pf::serialize::ParseMode::plan_only
                                                  : pf::serialize::ParseMode::plan_and_code;
        return parsed_to_dict(pf::serialize::unpack(
            output, parse_mode,
            strict ? pf::serialize::Strictness::strict : pf::serialize::Strictness::lenient));
      },
      py::arg("output"), py::arg("mode") = "plan_and_code", py::arg("strict") = true);

  m.def(
      "lm_nll",
      [](const std::vector<double>& logprobs) {
        return pf::serialize::lm_nll(std::span<const double>(logprobs));
      },
      py::arg("target_token_logprobs"));

  m.def("speedup", &pf::evalbench::speedup, py::arg("t_slow"), py::arg("t_fast"),
        py::arg("correct"), "t_slow/t_fast when correct; incorrect results get 1.0.");

  m.def("speedup_factor", &pf::rlmath::speedup_factor, py::arg("t_slow"), py::arg("t_gen"));

  m.def("reward", &py_reward, py::arg("compiled"), py::arg("correct"),
        py::arg("runtime_seconds"), py::arg("t_slow"), py::arg("omega") = 100.0,
        py::arg("incorrect_as_compile_failure") = false);

  m.def(
      "group_advantages",
      [](const std::vector<double>& rewards, double eps) {
        return pf::rlmath::group_advantages(std::span<const double>(rewards), eps);
      },
      py::arg("rewards"), py::arg("eps") = 1e-8);

  m.def("clipped_surrogate_term", &pf::rlmath::clipped_surrogate_term, py::arg("logp_new"),
        py::arg("logp_old"), py::arg("advantage"), py::arg("eps"));

  m.def("kl_penalty_term", &pf::rlmath::kl_penalty_term, py::arg("logp_new"),
        py::arg("logp_ref"));

  m.def("grpo_objective", &py_grpo_objective, py::arg("members"), py::arg("eps") = 0.2,
        py::arg("beta") = 0.04,
        "members: list of (logp_new, logp_old, logp_ref, advantage) tuples.");

  m.def("rarity_score", &py_rarity_score, py::arg("categories"), py::arg("frequencies"));

  m.def(
      "aggregate_metrics",
      [](const std::vector<std::tuple<double, bool, bool>>& rows) {
        std::vector<pf::evalbench::EvalResult> results;
        results.reserve(rows.size());
        for (const auto& [speedup, correct, effective] : rows) {
          pf::evalbench::EvalResult r;
          r.speedup = speedup;
          r.correct = correct;
          r.effective = effective;
          results.push_back(std::move(r));
        }
        pf::evalbench::Metrics m2 = pf::evalbench::aggregate_metrics(results);
        py::dict out;
        out["mean_speedup"] = m2.mean_speedup;
        out["effective_rate_percent"] = m2.effective_rate_percent;
        out["accuracy_percent"] = m2.accuracy_percent;
        return out;
      },
      py::arg("rows"), "rows: list of (speedup, correct, effective) tuples.");
}
