#include "perfforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "perfforge/chat_client.hpp"
#include "perfforge/corpus.hpp"
#include "perfforge/errors.hpp"
#include "perfforge/evalbench.hpp"
#include "perfforge/hash.hpp"
#include "perfforge/mock_server.hpp"
#include "perfforge/orchestrate.hpp"
#include "perfforge/rlmath.hpp"
#include "perfforge/sampling.hpp"
#include "perfforge/serialize.hpp"
#include "perfforge/strategy.hpp"

namespace perfforge::pipeline {

namespace {

std::string digest_of(const json& j) { return fnv1a64_hex(j.dump()); }

chat::ChatClientConfig client_config(const std::string& endpoint, const std::string& model) {
  chat::ChatClientConfig cfg;
  cfg.endpoint_url = endpoint;
  cfg.model_name = model;
  return cfg;
}

evalbench::RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return evalbench::RunConfig{};
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw InputError("invalid run config " + path + ": " + e.what());
  }
  return evalbench::RunConfig::from_json(j);
}

prompts::PromptTemplates load_templates(const std::string& dir) {
  // the versioned repo-relative default keeps the documented command lines
  // short; --prompts overrides
  std::string resolved = dir.empty() ? "data/prompts" : dir;
  if (!std::filesystem::is_directory(resolved)) {
    throw UsageError("prompt templates directory not found: " + resolved +
                     (dir.empty() ? " (pass --prompts)" : ""));
  }
  return prompts::PromptTemplates::load_dir(resolved);
}

json summary_line(json j) {
  std::cout << j.dump() << std::endl;
  return j;
}

void require_distinct_output(const std::string& out, std::initializer_list<std::string> inputs) {
  if (out.empty()) throw UsageError("an output path is required (--out)");
  for (const std::string& in : inputs) {
    if (!in.empty() && in == out) {
      throw UsageError("output path '" + out + "' collides with an input path");
    }
  }
}

}  // namespace

json run_curate(const CurateOptions& opt) {
  require_distinct_output(opt.out, {opt.in});
  if (!(opt.factor > 1.0)) {
    throw UsageError("global-best replacement factor must be > 1, got " +
                     std::to_string(opt.factor));
  }
  JsonlFile in = read_jsonl(opt.in);
  std::vector<corpus::Submission> submissions;
  submissions.reserve(in.records.size());
  for (const json& j : in.records) submissions.push_back(corpus::submission_from_json(j));
  corpus::Corpus corp = corpus::Corpus::build(std::move(submissions));

  std::vector<corpus::CodePair> pairs = corpus::final_pairs(corp, opt.min_speedup);
  std::map<std::string, std::optional<corpus::Submission>> best_by_problem;
  std::size_t cross_user = 0;
  for (corpus::CodePair& pair : pairs) {
    auto it = best_by_problem.find(pair.problem_id);
    if (it == best_by_problem.end()) {
      it = best_by_problem.emplace(pair.problem_id, corpus::global_best(corp, pair.problem_id))
               .first;
    }
    if (it->second) pair = corpus::apply_global_best_replacement(pair, *it->second, opt.factor);
    if (pair.origin == corpus::PairOrigin::cross_user) ++cross_user;
  }

  json config{{"factor", opt.factor}, {"min_speedup", opt.min_speedup}};
  std::vector<json> records;
  records.reserve(pairs.size());
  for (const corpus::CodePair& p : pairs) records.push_back(corpus::to_json(p));
  write_jsonl_atomic(opt.out, make_provenance("curate", opt.seed, digest_of(config), {opt.in}),
                     records);
  return summary_line(json{{"stage", "curate"},
                           {"out", opt.out},
                           {"pairs", pairs.size()},
                           {"cross_user_pairs", cross_user}});
}

json run_annotate(const AnnotateOptions& opt) {
  require_distinct_output(opt.out, {opt.pairs, opt.taxonomy});
  JsonlFile in = read_jsonl(opt.pairs);
  std::vector<corpus::CodePair> pairs;
  pairs.reserve(in.records.size());
  for (const json& j : in.records) pairs.push_back(corpus::pair_from_json(j));

  strategy::CategoryTaxonomy taxonomy = strategy::CategoryTaxonomy::load(opt.taxonomy);
  prompts::PromptTemplates templates = load_templates(opt.prompts_dir);
  chat::ChatClientConfig cfg = client_config(opt.endpoint, opt.model);
  cfg.concurrency_limit = std::max(opt.concurrency, 1);
  cfg.temperature = 0.0;  // annotation wants reproducible extractions
  chat::HttpChatClient client(cfg);

  strategy::AnnotateStats stats;
  std::vector<strategy::AnnotatedPair> annotated =
      strategy::annotate_pairs(pairs, taxonomy, client, templates, opt.concurrency, &stats);

  json config{{"endpoint", opt.endpoint},
              {"model", opt.model},
              {"concurrency", opt.concurrency}};
  std::vector<json> records;
  records.reserve(annotated.size());
  for (const strategy::AnnotatedPair& p : annotated) records.push_back(strategy::to_json(p));
  write_jsonl_atomic(opt.out,
                     make_provenance("annotate", opt.seed, digest_of(config),
                                     {opt.pairs, opt.taxonomy}),
                     records);
  return summary_line(json{{"stage", "annotate"},
                           {"out", opt.out},
                           {"pairs_in", stats.pairs_in},
                           {"pairs_annotated", stats.pairs_annotated},
                           {"pairs_dropped", stats.pairs_dropped},
                           {"drop_rate", stats.drop_rate()},
                           {"strategies_total", stats.strategies_total}});
}

namespace {

std::string distribution_csv(const std::map<std::string, double>& before,
                             const std::map<std::string, double>& after) {
  std::ostringstream out;
  out << "category,before_percent,after_percent\n";
  std::map<std::string, std::pair<double, double>> merged;
  for (const auto& [cat, pct] : before) merged[cat].first = pct;
  for (const auto& [cat, pct] : after) merged[cat].second = pct;
  for (const auto& [cat, shares] : merged) {
    out << '"' << cat << "\"," << shares.first << ',' << shares.second << '\n';
  }
  return out.str();
}

}  // namespace

json run_balance(const BalanceOptions& opt) {
  require_distinct_output(opt.out, {opt.annotated});
  JsonlFile in = read_jsonl(opt.annotated);
  std::vector<strategy::AnnotatedPair> annotated;
  annotated.reserve(in.records.size());
  for (const json& j : in.records) annotated.push_back(strategy::annotated_from_json(j));
  if (annotated.empty()) throw InputError("no annotated pairs in " + opt.annotated);

  sampling::FrequencyTable freqs = sampling::strategy_frequencies(annotated);
  sampling::BalancedSubset subset = sampling::balanced_select(annotated, opt.budget, freqs);

  std::vector<strategy::AnnotatedPair> selected;
  selected.reserve(subset.selected.size());
  std::vector<json> records;
  records.reserve(subset.selected.size());
  for (const sampling::SelectedPair& s : subset.selected) {
    selected.push_back(s.pair);
    json j = strategy::to_json(s.pair);
    j["selection_round"] = s.round;
    j["rarity_score"] = sampling::rarity_score(s.pair, freqs);
    records.push_back(std::move(j));
  }

  json config{{"budget", opt.budget}};
  write_jsonl_atomic(opt.out,
                     make_provenance("balance", opt.seed, digest_of(config), {opt.annotated}),
                     records);
  if (!opt.report.empty()) {
    write_file_atomic(opt.report, distribution_csv(sampling::category_distribution(annotated),
                                                   sampling::category_distribution(selected)));
  }
  return summary_line(json{{"stage", "balance"},
                           {"out", opt.out},
                           {"selected", subset.selected.size()},
                           {"corpus", annotated.size()}});
}

json run_pack(const PackOptions& opt) {
  require_distinct_output(opt.out, {opt.annotated, opt.instruction_template});
  JsonlFile in = read_jsonl(opt.annotated);
  const std::string instruction_template = read_file(opt.instruction_template);
  std::vector<json> records;
  records.reserve(in.records.size());
  for (const json& j : in.records) {
    strategy::AnnotatedPair pair = strategy::annotated_from_json(j);
    serialize::TrainingExample ex = serialize::make_training_example(instruction_template, pair);
    records.push_back(json{{"instruction", ex.instruction},
                           {"input", ex.slow_code},
                           {"output", ex.target}});
  }
  json config{{"instruction_template", opt.instruction_template}};
  write_jsonl_atomic(opt.out,
                     make_provenance("pack", opt.seed, digest_of(config),
                                     {opt.annotated, opt.instruction_template}),
                     records);
  return summary_line(json{{"stage", "pack"}, {"out", opt.out}, {"examples", records.size()}});
}

json run_eval(const EvalOptions& opt) {
  require_distinct_output(opt.out, {opt.pairs, opt.candidates, opt.run_config});
  JsonlFile pairs_file = read_jsonl(opt.pairs);
  std::map<std::string, corpus::CodePair> pairs;
  for (const json& j : pairs_file.records) {
    corpus::CodePair p = corpus::pair_from_json(j);
    pairs[p.pair_id] = std::move(p);
  }
  JsonlFile candidates = read_jsonl(opt.candidates);
  evalbench::RunConfig run_config = load_run_config(opt.run_config);

  struct Candidate {
    std::string candidate_id;
    std::string pair_id;
    std::string code;
  };
  std::vector<Candidate> work;
  work.reserve(candidates.records.size());
  for (const json& j : candidates.records) {
    try {
      work.push_back(Candidate{j.at("candidate_id").get<std::string>(),
                               j.at("pair_id").get<std::string>(),
                               j.at("code").get<std::string>()});
    } catch (const json::exception& e) {
      throw InputError(std::string("malformed candidate record: ") + e.what());
    }
  }

  std::map<std::string, std::vector<evalbench::TestCase>> tests_by_problem;
  std::map<std::string, double> baseline_by_pair;
  std::mutex cache_mu;
  std::vector<json> results(work.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr fatal;

  auto process = [&](std::size_t i) {
    const Candidate& c = work[i];
    auto pair_it = pairs.find(c.pair_id);
    if (pair_it == pairs.end()) {
      throw InputError("candidate " + c.candidate_id + " references unknown pair " + c.pair_id);
    }
    const corpus::CodePair& pair = pair_it->second;
    const std::vector<evalbench::TestCase>* tests = nullptr;
    double t_slow = 0.0;
    {
      std::lock_guard<std::mutex> lock(cache_mu);
      auto t_it = tests_by_problem.find(pair.problem_id);
      if (t_it == tests_by_problem.end()) {
        t_it = tests_by_problem
                   .emplace(pair.problem_id,
                            evalbench::load_problem_tests(opt.tests_dir, pair.problem_id))
                   .first;
      }
      tests = &t_it->second;
      auto b_it = baseline_by_pair.find(c.pair_id);
      if (b_it == baseline_by_pair.end()) {
        b_it = baseline_by_pair
                   .emplace(c.pair_id, evalbench::baseline_runtime(pair.slow.source_code,
                                                                   *tests, run_config))
                   .first;
      }
      t_slow = b_it->second;
    }
    evalbench::EvalResult r = evalbench::evaluate_candidate(c.code, *tests, t_slow, run_config);
    json j;
    j["candidate_id"] = c.candidate_id;
    j["pair_id"] = c.pair_id;
    j["problem_id"] = pair.problem_id;
    j["compile_command"] = run_config.compile_command;
    j["t_slow"] = t_slow;
    j["eval"] = evalbench::to_json(r);
    results[i] = std::move(j);
  };

  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= work.size()) return;
      try {
        process(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!fatal) fatal = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(run_config.worker_count, 1)),
                            std::max<std::size_t>(work.size(), 1));
  for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
  if (fatal) std::rethrow_exception(fatal);

  std::sort(results.begin(), results.end(), [](const json& a, const json& b) {
    return a.at("candidate_id").get<std::string>() < b.at("candidate_id").get<std::string>();
  });

  std::vector<evalbench::EvalResult> evals;
  evals.reserve(results.size());
  for (const json& j : results) evals.push_back(evalbench::result_from_json(j.at("eval")));

  json config = run_config.to_json();
  std::vector<std::string> inputs = {opt.pairs, opt.candidates};
  if (!opt.run_config.empty()) inputs.push_back(opt.run_config);
  write_jsonl_atomic(opt.out, make_provenance("eval", opt.seed, digest_of(config), inputs),
                     results);
  json summary{{"stage", "eval"}, {"out", opt.out}, {"candidates", results.size()}};
  if (!evals.empty()) {
    evalbench::Metrics m = evalbench::aggregate_metrics(evals);
    summary["mean_speedup"] = m.mean_speedup;
    summary["effective_rate_percent"] = m.effective_rate_percent;
    summary["accuracy_percent"] = m.accuracy_percent;
  }
  return summary_line(summary);
}

json run_report(const ReportOptions& opt) {
  JsonlFile in = read_jsonl(opt.results);
  if (in.records.empty()) throw InputError("no results in " + opt.results);

  std::vector<evalbench::EvalResult> all;
  std::map<std::string, std::vector<evalbench::EvalResult>> by_problem;
  for (const json& j : in.records) {
    evalbench::EvalResult r = evalbench::result_from_json(j.at("eval"));
    by_problem[j.value("problem_id", "unknown")].push_back(r);
    all.push_back(std::move(r));
  }
  evalbench::Metrics overall = evalbench::aggregate_metrics(all);

  std::ostringstream csv;
  csv << "problem_id,n,mean_speedup,effective_rate_percent,accuracy_percent\n";
  for (const auto& [problem, results] : by_problem) {
    evalbench::Metrics m = evalbench::aggregate_metrics(results);
    csv << '"' << problem << "\"," << results.size() << ',' << m.mean_speedup << ','
        << m.effective_rate_percent << ',' << m.accuracy_percent << '\n';
  }
  csv << "\"__overall__\"," << all.size() << ',' << overall.mean_speedup << ','
      << overall.effective_rate_percent << ',' << overall.accuracy_percent << '\n';

  std::cout << "metric,value\n"
            << "mean_speedup," << overall.mean_speedup << '\n'
            << "effective_rate_percent," << overall.effective_rate_percent << '\n'
            << "accuracy_percent," << overall.accuracy_percent << '\n';
  if (!opt.out.empty()) write_file_atomic(opt.out, csv.str());
  return summary_line(json{{"stage", "report"},
                           {"results", in.records.size()},
                           {"mean_speedup", overall.mean_speedup},
                           {"effective_rate_percent", overall.effective_rate_percent},
                           {"accuracy_percent", overall.accuracy_percent}});
}

json run_reward(const RewardOptions& opt) {
  require_distinct_output(opt.out, {opt.groups});
  JsonlFile in = read_jsonl(opt.groups);
  rlmath::RewardConfig reward_config;
  reward_config.omega = opt.omega;
  reward_config.incorrect_policy = opt.incorrect_as_compile_failure
                                       ? rlmath::IncorrectPolicy::as_compile_failure
                                       : rlmath::IncorrectPolicy::as_regression;
  reward_config.validate();

  std::vector<json> records;
  records.reserve(in.records.size());
  for (const json& j : in.records) {
    rlmath::GroupSample group = rlmath::group_from_json(j);
    for (rlmath::GroupMember& m : group.members) {
      if (m.eval) {
        m.reward = rlmath::reward(*m.eval, group.t_slow, reward_config);
      } else {
        m.reward = -reward_config.omega;  // malformed generation
      }
    }
    std::vector<double> rewards;
    rewards.reserve(group.members.size());
    for (const rlmath::GroupMember& m : group.members) rewards.push_back(m.reward);
    std::vector<double> advantages =
        rlmath::group_advantages(rewards, opt.degenerate_std_epsilon);
    for (std::size_t i = 0; i < group.members.size(); ++i) {
      group.members[i].advantage = advantages[i];
    }
    records.push_back(rlmath::to_json(group));
  }
  json config{{"omega", opt.omega},
              {"incorrect_as_compile_failure", opt.incorrect_as_compile_failure}};
  write_jsonl_atomic(opt.out, make_provenance("reward", opt.seed, digest_of(config), {opt.groups}),
                     records);
  return summary_line(json{{"stage", "reward"}, {"out", opt.out}, {"groups", records.size()}});
}

json run_grpo_objective(const GrpoObjectiveOptions& opt) {
  JsonlFile in = read_jsonl(opt.groups);
  rlmath::GrpoConfig config;
  config.clip_epsilon = opt.eps;
  config.kl_beta = opt.beta;
  config.validate();

  std::vector<json> records;
  double sum = 0.0;
  for (const json& j : in.records) {
    rlmath::GroupSample group = rlmath::group_from_json(j);
    const double objective = rlmath::grpo_objective(group, config);
    sum += objective;
    records.push_back(json{{"id", group.id}, {"objective", objective}});
    std::cout << records.back().dump() << '\n';
  }
  if (records.empty()) throw InputError("no groups in " + opt.groups);
  if (!opt.out.empty()) {
    json cfg{{"eps", opt.eps}, {"beta", opt.beta}};
    write_jsonl_atomic(opt.out,
                       make_provenance("grpo-objective", opt.seed, digest_of(cfg), {opt.groups}),
                       records);
  }
  return summary_line(json{{"stage", "grpo-objective"},
                           {"groups", records.size()},
                           {"mean_objective", sum / static_cast<double>(records.size())}});
}

namespace {

struct ProgramRecord {
  std::string id;
  std::string problem_id;
  std::string slow_code;
};

std::vector<ProgramRecord> load_programs(const std::string& path) {
  JsonlFile in = read_jsonl(path);
  std::vector<ProgramRecord> out;
  out.reserve(in.records.size());
  for (const json& j : in.records) {
    try {
      out.push_back(ProgramRecord{j.at("id").get<std::string>(), j.value("problem_id", ""),
                                  j.at("slow_code").get<std::string>()});
    } catch (const json::exception& e) {
      throw InputError(std::string("malformed program record: ") + e.what());
    }
  }
  return out;
}

}  // namespace

json run_plan(const PlanOptions& opt) {
  require_distinct_output(opt.out, {opt.in});
  std::vector<ProgramRecord> programs = load_programs(opt.in);
  prompts::PromptTemplates templates = load_templates(opt.prompts_dir);
  chat::HttpChatClient client(client_config(opt.endpoint, opt.model));

  std::vector<json> records;
  records.reserve(programs.size());
  for (std::size_t i = 0; i < programs.size(); ++i) {
    const ProgramRecord& p = programs[i];
    json j{{"id", p.id}};
    try {
      std::vector<strategy::CategorizedStrategy> strategies =
          orchestrate::plan_only(p.slow_code, client, templates, nullptr, opt.seed + i);
      json list = json::array();
      for (const strategy::CategorizedStrategy& s : strategies) {
        list.push_back(json{{"category", s.category}, {"desc", s.desc}});
      }
      j["strategies"] = list;
      j["error"] = nullptr;
    } catch (const InputError& e) {
      j["strategies"] = json::array();
      j["error"] = e.what();
    }
    records.push_back(std::move(j));
  }
  json config{{"endpoint", opt.endpoint}, {"model", opt.model}};
  write_jsonl_atomic(opt.out, make_provenance("plan", opt.seed, digest_of(config), {opt.in}),
                     records);
  return summary_line(json{{"stage", "plan"}, {"out", opt.out}, {"programs", records.size()}});
}

json run_optimize(const OptimizeOptions& opt) {
  require_distinct_output(opt.out, {opt.in});
  std::vector<ProgramRecord> programs = load_programs(opt.in);
  prompts::PromptTemplates templates = load_templates(opt.prompts_dir);

  std::vector<json> records;
  records.reserve(programs.size());
  if (opt.mode == "single") {
    chat::HttpChatClient client(client_config(opt.endpoint, opt.model));
    for (std::size_t i = 0; i < programs.size(); ++i) {
      const ProgramRecord& p = programs[i];
      orchestrate::GenerationOutcome outcome =
          orchestrate::single_step_optimize(p.slow_code, client, templates, nullptr, opt.seed + i);
      json j{{"id", p.id}, {"raw_reply", outcome.raw_reply}};
      if (outcome.parsed) {
        json list = json::array();
        for (const strategy::CategorizedStrategy& s : outcome.parsed->strategies) {
          list.push_back(json{{"category", s.category}, {"desc", s.desc}});
        }
        j["strategies"] = list;
        j["code"] = outcome.parsed->code ? json(*outcome.parsed->code) : json(nullptr);
      } else {
        j["strategies"] = json::array();
        j["code"] = nullptr;
      }
      j["error"] = outcome.error ? json(*outcome.error) : json(nullptr);
      records.push_back(std::move(j));
    }
  } else if (opt.mode == "two-step") {
    chat::HttpChatClient planner(client_config(opt.planner_endpoint, opt.planner_model));
    chat::HttpChatClient optimizer(client_config(opt.optimizer_endpoint, opt.optimizer_model));
    for (std::size_t i = 0; i < programs.size(); ++i) {
      const ProgramRecord& p = programs[i];
      orchestrate::TwoStepTrace trace;
      try {
        trace = orchestrate::two_step(p.slow_code, planner, optimizer, templates, nullptr,
                                      opt.seed + i);
      } catch (const InputError& e) {
        // empty or unparseable plan aborts this trace, not the batch
        trace.slow_code = p.slow_code;
        trace.error = e.what();
      }
      trace.id = p.id;
      records.push_back(orchestrate::to_json(trace));
    }
  } else {
    throw UsageError("unknown optimize mode '" + opt.mode + "' (expected single or two-step)");
  }
  json config{{"mode", opt.mode}};
  write_jsonl_atomic(opt.out, make_provenance("optimize", opt.seed, digest_of(config), {opt.in}),
                     records);
  return summary_line(
      json{{"stage", "optimize"}, {"mode", opt.mode}, {"out", opt.out},
           {"programs", records.size()}});
}

std::uint64_t grpo_member_base_seed(std::uint64_t seed, const std::string& program_id) {
  return fnv1a64(std::to_string(seed) + ':' + program_id) %
         (std::numeric_limits<std::uint64_t>::max() - 1000000ull);
}

json run_grpo_sample(const GrpoSampleOptions& opt) {
  require_distinct_output(opt.out, {opt.in, opt.run_config, opt.journal});
  if (opt.group_size < 2) throw UsageError("group size must be >= 2");
  std::vector<ProgramRecord> programs = load_programs(opt.in);
  prompts::PromptTemplates templates = load_templates(opt.prompts_dir);
  evalbench::RunConfig run_config = load_run_config(opt.run_config);
  chat::HttpChatClient planner(client_config(opt.planner_endpoint, opt.planner_model));
  chat::HttpChatClient optimizer(client_config(opt.optimizer_endpoint, opt.optimizer_model));
  rlmath::RewardConfig reward_config;
  reward_config.omega = opt.omega;

  std::optional<orchestrate::Journal> journal;
  if (!opt.journal.empty()) journal = orchestrate::Journal::open(opt.journal);

  std::vector<json> records;
  records.reserve(programs.size());
  for (const ProgramRecord& p : programs) {
    if (p.problem_id.empty()) {
      throw InputError("program " + p.id + " has no problem_id; tests cannot be located");
    }
    orchestrate::EvalContext ctx;
    ctx.tests = evalbench::load_problem_tests(opt.tests_dir, p.problem_id);
    ctx.run_config = run_config;
    ctx.t_slow = evalbench::baseline_runtime(p.slow_code, ctx.tests, run_config);
    const std::uint64_t base_seed = grpo_member_base_seed(opt.seed, p.id);
    rlmath::GroupSample group = orchestrate::sample_group(
        p.id, p.slow_code, planner, optimizer, opt.group_size, templates, ctx, reward_config,
        opt.degenerate_std_epsilon, journal ? &*journal : nullptr, base_seed);
    group.problem_id = p.problem_id;
    records.push_back(rlmath::to_json(group));
  }
  std::sort(records.begin(), records.end(), [](const json& a, const json& b) {
    return a.at("id").get<std::string>() < b.at("id").get<std::string>();
  });

  json config{{"group_size", opt.group_size},
              {"omega", opt.omega},
              {"planner_model", opt.planner_model},
              {"optimizer_model", opt.optimizer_model}};
  std::vector<std::string> inputs = {opt.in};
  if (!opt.run_config.empty()) inputs.push_back(opt.run_config);
  write_jsonl_atomic(opt.out, make_provenance("grpo-sample", opt.seed, digest_of(config), inputs),
                     records);
  return summary_line(json{{"stage", "grpo-sample"},
                           {"out", opt.out},
                           {"groups", records.size()},
                           {"g", opt.group_size}});
}

json run_mock_serve(const MockServeOptions& opt) {
  mockserver::MockChatServer server(mockserver::load_replies(opt.replies));
  int port = server.start(opt.port);
  std::cout << json{{"stage", "mock-serve"}, {"port", port}}.dump() << std::endl;
  // block until interrupted
  static std::atomic<bool> stop_requested{false};
  std::signal(SIGINT, [](int) { stop_requested = true; });
  std::signal(SIGTERM, [](int) { stop_requested = true; });
  while (!stop_requested) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  server.stop();
  return json{{"stage", "mock-serve"}, {"port", port}};
}

}  // namespace perfforge::pipeline
