#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "perfforge/errors.hpp"
#include "perfforge/jsonl.hpp"
#include "perfforge/pipeline.hpp"
#include "perfforge/version.hpp"

namespace pf = perfforge;
namespace pl = perfforge::pipeline;

namespace {

// Stage sections of the pipeline config file fill in whatever the command
// line left unset; explicit flags always win.
class ConfigMerge {
 public:
  ConfigMerge(const pf::json* config, const std::string& stage, CLI::App* app)
      : app_(app) {
    if (config != nullptr && config->contains(stage)) section_ = &config->at(stage);
  }

  template <typename T>
  void fill(const std::string& flag, const char* key, T& value) {
    const CLI::Option* opt = app_->get_option_no_throw(flag);
    if (opt != nullptr && opt->count() > 0) return;
    if (section_ != nullptr && section_->contains(key)) {
      try {
        value = section_->at(key).get<T>();
      } catch (const pf::json::exception& e) {
        throw pf::UsageError("config key '" + std::string(key) + "': " + e.what());
      }
    }
  }

 private:
  const pf::json* section_ = nullptr;
  CLI::App* app_ = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perfforge: strategy-aware code optimization pipeline"};
  app.set_version_flag("--version", pf::kVersion);
  app.require_subcommand(1);
  app.fallthrough();  // --config/--seed may follow the subcommand

  std::string config_path;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "pipeline config file (JSON, per-stage sections)");
  app.add_option("--seed", seed, "seed recorded in output provenance and request sampling");

  pl::CurateOptions curate;
  CLI::App* curate_cmd = app.add_subcommand("curate", "reconstruct slow/fast pairs");
  curate_cmd->add_option("--in", curate.in, "submissions JSONL");
  curate_cmd->add_option("--out", curate.out, "pairs JSONL");
  curate_cmd->add_option("--factor", curate.factor, "global-best replacement factor");
  curate_cmd->add_option("--min-speedup", curate.min_speedup, "pair-generation threshold");

  pl::AnnotateOptions annotate;
  CLI::App* annotate_cmd = app.add_subcommand("annotate", "extract categorized strategies");
  annotate_cmd->add_option("--pairs", annotate.pairs, "pairs JSONL");
  annotate_cmd->add_option("--taxonomy", annotate.taxonomy, "taxonomy JSONL (15 records)");
  annotate_cmd->add_option("--endpoint", annotate.endpoint, "chat endpoint url");
  annotate_cmd->add_option("--model", annotate.model, "model name");
  annotate_cmd->add_option("--prompts", annotate.prompts_dir, "prompt templates directory");
  annotate_cmd->add_option("--concurrency", annotate.concurrency, "max in-flight requests");
  annotate_cmd->add_option("--out", annotate.out, "annotated pairs JSONL");

  pl::BalanceOptions balance;
  CLI::App* balance_cmd = app.add_subcommand("balance", "rarity-weighted balanced selection");
  balance_cmd->add_option("--annotated", balance.annotated, "annotated pairs JSONL");
  balance_cmd->add_option("--budget", balance.budget, "subset size");
  balance_cmd->add_option("--out", balance.out, "balanced subset JSONL");
  balance_cmd->add_option("--report", balance.report, "before/after category share CSV");

  pl::PackOptions pack;
  CLI::App* pack_cmd = app.add_subcommand("pack", "serialize single-step training targets");
  pack_cmd->add_option("--annotated", pack.annotated, "annotated pairs JSONL");
  pack_cmd->add_option("--instruction-template", pack.instruction_template,
                       "instruction template file");
  pack_cmd->add_option("--out", pack.out, "SFT records JSONL");

  pl::EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "compile, judge and measure candidates");
  eval_cmd->add_option("--pairs", eval.pairs, "pairs JSONL (baselines)");
  eval_cmd->add_option("--candidates", eval.candidates, "candidates JSONL");
  eval_cmd->add_option("--tests", eval.tests_dir, "problem bundle directory");
  eval_cmd->add_option("--config", eval.run_config, "run config JSON");
  eval_cmd->add_option("--out", eval.out, "results JSONL");

  pl::ReportOptions report;
  CLI::App* report_cmd = app.add_subcommand("report", "three-metric table and per-problem CSV");
  report_cmd->add_option("--results", report.results, "results JSONL");
  report_cmd->add_option("--out", report.out, "per-problem CSV path");

  pl::RewardOptions reward;
  CLI::App* reward_cmd = app.add_subcommand("reward", "reward and advantage annotation");
  reward_cmd->add_option("--groups", reward.groups, "group samples JSONL");
  reward_cmd->add_option("--omega", reward.omega, "compile-failure penalty magnitude");
  reward_cmd->add_flag("--incorrect-as-compile-failure", reward.incorrect_as_compile_failure,
                       "penalize compiled-but-incorrect outputs with -omega");
  reward_cmd->add_option("--out", reward.out, "annotated groups JSONL");

  pl::GrpoObjectiveOptions grpo_objective;
  CLI::App* grpo_objective_cmd =
      app.add_subcommand("grpo-objective", "clipped surrogate objective over groups");
  grpo_objective_cmd->add_option("--groups", grpo_objective.groups, "group samples JSONL");
  grpo_objective_cmd->add_option("--eps", grpo_objective.eps, "clip epsilon");
  grpo_objective_cmd->add_option("--beta", grpo_objective.beta, "KL penalty weight");
  grpo_objective_cmd->add_option("--out", grpo_objective.out, "objectives JSONL (optional)");

  pl::PlanOptions plan;
  CLI::App* plan_cmd = app.add_subcommand("plan", "plan-only strategy generation");
  plan_cmd->add_option("--in", plan.in, "programs JSONL");
  plan_cmd->add_option("--endpoint", plan.endpoint, "chat endpoint url");
  plan_cmd->add_option("--model", plan.model, "model name");
  plan_cmd->add_option("--prompts", plan.prompts_dir, "prompt templates directory");
  plan_cmd->add_option("--out", plan.out, "plans JSONL");

  pl::OptimizeOptions optimize;
  CLI::App* optimize_cmd = app.add_subcommand("optimize", "single or two-step optimization");
  optimize_cmd->add_option("--in", optimize.in, "programs JSONL");
  optimize_cmd->add_option("--mode", optimize.mode, "single | two-step");
  optimize_cmd->add_option("--endpoint", optimize.endpoint, "endpoint (single mode)");
  optimize_cmd->add_option("--model", optimize.model, "model (single mode)");
  optimize_cmd->add_option("--planner-endpoint", optimize.planner_endpoint, "planner endpoint");
  optimize_cmd->add_option("--planner-model", optimize.planner_model, "planner model");
  optimize_cmd->add_option("--optimizer-endpoint", optimize.optimizer_endpoint,
                           "optimizer endpoint");
  optimize_cmd->add_option("--optimizer-model", optimize.optimizer_model, "optimizer model");
  optimize_cmd->add_option("--prompts", optimize.prompts_dir, "prompt templates directory");
  optimize_cmd->add_option("--out", optimize.out, "traces JSONL");

  pl::GrpoSampleOptions grpo_sample;
  CLI::App* grpo_sample_cmd = app.add_subcommand("grpo-sample", "G-way group sampling");
  grpo_sample_cmd->add_option("--in", grpo_sample.in, "programs JSONL");
  grpo_sample_cmd->add_option("--tests", grpo_sample.tests_dir, "problem bundle directory");
  grpo_sample_cmd->add_option("--run-config", grpo_sample.run_config, "run config JSON");
  grpo_sample_cmd->add_option("--planner-endpoint", grpo_sample.planner_endpoint,
                              "planner endpoint");
  grpo_sample_cmd->add_option("--planner-model", grpo_sample.planner_model, "planner model");
  grpo_sample_cmd->add_option("--optimizer-endpoint", grpo_sample.optimizer_endpoint,
                              "optimizer endpoint");
  grpo_sample_cmd->add_option("--optimizer-model", grpo_sample.optimizer_model,
                              "optimizer model");
  grpo_sample_cmd->add_option("--prompts", grpo_sample.prompts_dir,
                              "prompt templates directory");
  grpo_sample_cmd->add_option("--journal", grpo_sample.journal,
                              "completion journal path (resume support)");
  grpo_sample_cmd->add_option("--g", grpo_sample.group_size, "group size G");
  grpo_sample_cmd->add_option("--omega", grpo_sample.omega, "penalty magnitude");
  grpo_sample_cmd->add_option("--out", grpo_sample.out, "group samples JSONL");

  pl::MockServeOptions mock_serve;
  CLI::App* mock_serve_cmd =
      app.add_subcommand("mock-serve", "deterministic canned chat-completions server");
  mock_serve_cmd->add_option("--replies", mock_serve.replies, "canned replies JSONL");
  mock_serve_cmd->add_option("--port", mock_serve.port, "port (0 picks a free one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(pf::ExitCode::usage);
  }

  try {
    std::optional<pf::json> config;
    if (!config_path.empty()) {
      try {
        config = pf::json::parse(pf::read_file(config_path));
      } catch (const pf::json::exception& e) {
        throw pf::UsageError("invalid pipeline config " + config_path + ": " + e.what());
      }
    }
    const pf::json* cfg = config ? &*config : nullptr;

    if (curate_cmd->parsed()) {
      ConfigMerge m(cfg, "curate", curate_cmd);
      m.fill("--in", "in", curate.in);
      m.fill("--out", "out", curate.out);
      m.fill("--factor", "factor", curate.factor);
      m.fill("--min-speedup", "min_speedup", curate.min_speedup);
      curate.seed = seed;
      pl::run_curate(curate);
    } else if (annotate_cmd->parsed()) {
      ConfigMerge m(cfg, "annotate", annotate_cmd);
      m.fill("--pairs", "pairs", annotate.pairs);
      m.fill("--taxonomy", "taxonomy", annotate.taxonomy);
      m.fill("--endpoint", "endpoint", annotate.endpoint);
      m.fill("--model", "model", annotate.model);
      m.fill("--prompts", "prompts", annotate.prompts_dir);
      m.fill("--concurrency", "concurrency", annotate.concurrency);
      m.fill("--out", "out", annotate.out);
      annotate.seed = seed;
      pl::run_annotate(annotate);
    } else if (balance_cmd->parsed()) {
      ConfigMerge m(cfg, "balance", balance_cmd);
      m.fill("--annotated", "annotated", balance.annotated);
      m.fill("--budget", "budget", balance.budget);
      m.fill("--out", "out", balance.out);
      m.fill("--report", "report", balance.report);
      balance.seed = seed;
      pl::run_balance(balance);
    } else if (pack_cmd->parsed()) {
      ConfigMerge m(cfg, "pack", pack_cmd);
      m.fill("--annotated", "annotated", pack.annotated);
      m.fill("--instruction-template", "instruction_template", pack.instruction_template);
      m.fill("--out", "out", pack.out);
      pack.seed = seed;
      pl::run_pack(pack);
    } else if (eval_cmd->parsed()) {
      ConfigMerge m(cfg, "eval", eval_cmd);
      m.fill("--pairs", "pairs", eval.pairs);
      m.fill("--candidates", "candidates", eval.candidates);
      m.fill("--tests", "tests", eval.tests_dir);
      m.fill("--config", "config", eval.run_config);
      m.fill("--out", "out", eval.out);
      eval.seed = seed;
      pl::run_eval(eval);
    } else if (report_cmd->parsed()) {
      ConfigMerge m(cfg, "report", report_cmd);
      m.fill("--results", "results", report.results);
      m.fill("--out", "out", report.out);
      pl::run_report(report);
    } else if (reward_cmd->parsed()) {
      ConfigMerge m(cfg, "reward", reward_cmd);
      m.fill("--groups", "groups", reward.groups);
      m.fill("--omega", "omega", reward.omega);
      m.fill("--out", "out", reward.out);
      reward.seed = seed;
      pl::run_reward(reward);
    } else if (grpo_objective_cmd->parsed()) {
      ConfigMerge m(cfg, "grpo-objective", grpo_objective_cmd);
      m.fill("--groups", "groups", grpo_objective.groups);
      m.fill("--eps", "eps", grpo_objective.eps);
      m.fill("--beta", "beta", grpo_objective.beta);
      m.fill("--out", "out", grpo_objective.out);
      grpo_objective.seed = seed;
      pl::run_grpo_objective(grpo_objective);
    } else if (plan_cmd->parsed()) {
      ConfigMerge m(cfg, "plan", plan_cmd);
      m.fill("--in", "in", plan.in);
      m.fill("--endpoint", "endpoint", plan.endpoint);
      m.fill("--model", "model", plan.model);
      m.fill("--prompts", "prompts", plan.prompts_dir);
      m.fill("--out", "out", plan.out);
      plan.seed = seed;
      pl::run_plan(plan);
    } else if (optimize_cmd->parsed()) {
      ConfigMerge m(cfg, "optimize", optimize_cmd);
      m.fill("--in", "in", optimize.in);
      m.fill("--mode", "mode", optimize.mode);
      m.fill("--endpoint", "endpoint", optimize.endpoint);
      m.fill("--model", "model", optimize.model);
      m.fill("--planner-endpoint", "planner_endpoint", optimize.planner_endpoint);
      m.fill("--planner-model", "planner_model", optimize.planner_model);
      m.fill("--optimizer-endpoint", "optimizer_endpoint", optimize.optimizer_endpoint);
      m.fill("--optimizer-model", "optimizer_model", optimize.optimizer_model);
      m.fill("--prompts", "prompts", optimize.prompts_dir);
      m.fill("--out", "out", optimize.out);
      optimize.seed = seed;
      pl::run_optimize(optimize);
    } else if (grpo_sample_cmd->parsed()) {
      ConfigMerge m(cfg, "grpo-sample", grpo_sample_cmd);
      m.fill("--in", "in", grpo_sample.in);
      m.fill("--tests", "tests", grpo_sample.tests_dir);
      m.fill("--run-config", "run_config", grpo_sample.run_config);
      m.fill("--planner-endpoint", "planner_endpoint", grpo_sample.planner_endpoint);
      m.fill("--planner-model", "planner_model", grpo_sample.planner_model);
      m.fill("--optimizer-endpoint", "optimizer_endpoint", grpo_sample.optimizer_endpoint);
      m.fill("--optimizer-model", "optimizer_model", grpo_sample.optimizer_model);
      m.fill("--prompts", "prompts", grpo_sample.prompts_dir);
      m.fill("--journal", "journal", grpo_sample.journal);
      m.fill("--g", "g", grpo_sample.group_size);
      m.fill("--omega", "omega", grpo_sample.omega);
      m.fill("--out", "out", grpo_sample.out);
      grpo_sample.seed = seed;
      pl::run_grpo_sample(grpo_sample);
    } else if (mock_serve_cmd->parsed()) {
      ConfigMerge m(cfg, "mock-serve", mock_serve_cmd);
      m.fill("--replies", "replies", mock_serve.replies);
      m.fill("--port", "port", mock_serve.port);
      pl::run_mock_serve(mock_serve);
    }
  } catch (const pf::Error& e) {
    std::cerr << "perfforge: " << e.what() << std::endl;
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "perfforge: unexpected failure: " << e.what() << std::endl;
    return static_cast<int>(pf::ExitCode::environment);
  }
  return 0;
}
