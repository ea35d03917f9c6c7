#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "perfforge/jsonl.hpp"

namespace perfforge::evalbench {

enum class OutputComparison { exact, trailing_whitespace_trimmed };
enum class Aggregation { min, median, mean };
enum class TimingIsolation { serialize_timing, pin_per_core };
// synthetic reads the runtime from a "// runtime-ms: <N>" marker in the
// source instead of the wall clock; compilation and correctness runs stay
// real. Used by reproducible fixture pipelines.
enum class TimingSource { wall_clock, synthetic };

struct TestCase {
  std::string id;
  std::string stdin_payload;
  std::string expected_stdout;
  OutputComparison comparison = OutputComparison::trailing_whitespace_trimmed;
};

struct RunConfig {
  std::string compile_command = "g++ -O3 -std=c++17 {src} -o {out}";
  double per_test_time_limit_seconds = 10.0;
  int repetitions = 3;
  int warmups = 1;
  Aggregation aggregation = Aggregation::median;
  TimingIsolation timing_isolation = TimingIsolation::serialize_timing;
  TimingSource timing_source = TimingSource::wall_clock;
  std::size_t max_output_bytes = 16u << 20;
  int worker_count = 4;  // compile/correctness pool; timed runs follow timing_isolation

  void validate() const;
  static RunConfig from_json(const json& j);
  json to_json() const;
};

struct CompileFailure {
  std::string log;
};

// Executable in its own scratch directory; the directory is removed with the
// last handle.
class CompiledBinary {
 public:
  CompiledBinary(std::string dir, std::string exe_path, std::string source);
  const std::string& path() const { return exe_path_; }
  const std::string& scratch_dir() const;
  const std::string& source() const { return source_; }

 private:
  struct Scratch;
  std::shared_ptr<Scratch> scratch_;
  std::string exe_path_;
  std::string source_;
};

// CompileFailure is a result, not an exception; a missing compiler binary is
// an EnvironmentError.
std::variant<CompiledBinary, CompileFailure> compile(const std::string& source,
                                                     const RunConfig& config);

struct TestOutcome {
  std::string id;
  bool passed = false;
  double wall_seconds = 0.0;
  bool timed_out = false;
  int exit_code = 0;
};

std::vector<TestOutcome> run_tests(const CompiledBinary& binary,
                                   const std::vector<TestCase>& tests, const RunConfig& config);

// Total wall time across the suite per repetition; `warmups` repetitions are
// discarded and `aggregation` applied across the rest. Timed repetitions are
// globally serialized under serialize_timing. Throws MeasurementError-style
// EnvironmentError on timeout during measurement.
double measure_runtime(const CompiledBinary& binary, const std::vector<TestCase>& tests,
                       const RunConfig& config);

inline constexpr double kEffectiveSpeedupThreshold = 1.1;

// t_slow / t_fast for correct results; incorrect results are assigned 1.0 by
// protocol.
double speedup(double t_slow, double t_fast, bool correct);

struct EvalResult {
  bool compiled = false;
  std::string compile_log;
  std::vector<TestOutcome> per_test;
  std::optional<double> runtime_seconds;
  bool correct = false;
  double speedup = 1.0;
  bool effective = false;
};

bool effective(const EvalResult& result);

// Builds a protocol-consistent result: correct <=> compiled and all tests
// passed; incorrect results carry speedup 1.0; effective <=> correct and
// speedup >= 1.1.
EvalResult finalize_result(bool compiled, std::string compile_log,
                           std::vector<TestOutcome> per_test,
                           std::optional<double> runtime_seconds, double t_slow);

// compile -> judge -> (measure if correct) -> speedup against t_slow.
EvalResult evaluate_candidate(const std::string& source, const std::vector<TestCase>& tests,
                              double t_slow, const RunConfig& config);

// Baseline runtime of a program: synthetic marker or compile+measure.
double baseline_runtime(const std::string& source, const std::vector<TestCase>& tests,
                        const RunConfig& config);

struct Metrics {
  double mean_speedup = 0.0;
  double effective_rate_percent = 0.0;
  double accuracy_percent = 0.0;
};

Metrics aggregate_metrics(const std::vector<EvalResult>& results);

// Problem bundle layout: <dir>/<problem_id>/tests/<n>.in and <n>.out.
std::vector<TestCase> load_problem_tests(const std::string& tests_dir,
                                         const std::string& problem_id,
                                         OutputComparison comparison =
                                             OutputComparison::trailing_whitespace_trimmed);

json to_json(const EvalResult& r);
EvalResult result_from_json(const json& j);

// Synthetic-timing marker helpers.
std::optional<double> synthetic_runtime_seconds(const std::string& source);

}  // namespace perfforge::evalbench
