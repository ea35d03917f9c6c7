#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "perfforge/jsonl.hpp"

namespace perfforge::pipeline {

// Stage option structs mirror the CLI flags; every stage writes its artifact
// atomically with a provenance header and prints a one-line JSON summary.

struct CurateOptions {
  std::string in;
  std::string out;
  double factor = 2.0;
  double min_speedup = 1.1;
  std::uint64_t seed = 0;
};
json run_curate(const CurateOptions& opt);

struct AnnotateOptions {
  std::string pairs;
  std::string taxonomy;
  std::string endpoint;
  std::string model;
  std::string prompts_dir;
  int concurrency = 4;
  std::string out;
  std::uint64_t seed = 0;
};
json run_annotate(const AnnotateOptions& opt);

struct BalanceOptions {
  std::string annotated;
  std::int64_t budget = 5000;
  std::string out;
  std::string report;
  std::uint64_t seed = 0;
};
json run_balance(const BalanceOptions& opt);

struct PackOptions {
  std::string annotated;
  std::string instruction_template;
  std::string out;
  std::uint64_t seed = 0;
};
json run_pack(const PackOptions& opt);

struct EvalOptions {
  std::string pairs;
  std::string candidates;
  std::string tests_dir;
  std::string run_config;  // RunConfig JSON file; empty uses defaults
  std::string out;
  std::uint64_t seed = 0;
};
json run_eval(const EvalOptions& opt);

struct ReportOptions {
  std::string results;
  std::string out;  // optional CSV path
};
json run_report(const ReportOptions& opt);

struct RewardOptions {
  std::string groups;
  double omega = 100.0;
  bool incorrect_as_compile_failure = false;
  double degenerate_std_epsilon = 1e-8;
  std::string out;
  std::uint64_t seed = 0;
};
json run_reward(const RewardOptions& opt);

struct GrpoObjectiveOptions {
  std::string groups;
  double eps = 0.2;
  double beta = 0.04;
  std::string out;  // optional
  std::uint64_t seed = 0;
};
json run_grpo_objective(const GrpoObjectiveOptions& opt);

struct PlanOptions {
  std::string in;
  std::string endpoint;
  std::string model;
  std::string prompts_dir;
  std::string out;
  std::uint64_t seed = 0;
};
json run_plan(const PlanOptions& opt);

struct OptimizeOptions {
  std::string in;
  std::string mode = "single";  // single | two-step
  std::string endpoint;
  std::string model;
  std::string planner_endpoint;
  std::string planner_model;
  std::string optimizer_endpoint;
  std::string optimizer_model;
  std::string prompts_dir;
  std::string out;
  std::uint64_t seed = 0;
};
json run_optimize(const OptimizeOptions& opt);

struct GrpoSampleOptions {
  std::string in;
  std::string tests_dir;
  std::string run_config;
  std::string planner_endpoint;
  std::string planner_model;
  std::string optimizer_endpoint;
  std::string optimizer_model;
  std::string prompts_dir;
  std::string journal;  // optional path
  int group_size = 4;
  double omega = 100.0;
  double degenerate_std_epsilon = 1e-8;
  std::string out;
  std::uint64_t seed = 0;
};
json run_grpo_sample(const GrpoSampleOptions& opt);

struct MockServeOptions {
  std::string replies;
  int port = 0;
};
// blocks until the process is interrupted
json run_mock_serve(const MockServeOptions& opt);

// Base request seed for one program's group: member i sends base + i. Stable
// under reordering of the input file.
std::uint64_t grpo_member_base_seed(std::uint64_t seed, const std::string& program_id);

}  // namespace perfforge::pipeline
