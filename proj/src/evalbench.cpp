#include "perfforge/evalbench.hpp"

#include <sched.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "perfforge/errors.hpp"
#include "perfforge/subprocess.hpp"

namespace fs = std::filesystem;

namespace perfforge::evalbench {

namespace {

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::min: return "min";
    case Aggregation::median: return "median";
    case Aggregation::mean: return "mean";
  }
  return "median";
}

Aggregation aggregation_from_string(const std::string& s) {
  if (s == "min") return Aggregation::min;
  if (s == "median") return Aggregation::median;
  if (s == "mean") return Aggregation::mean;
  throw InputError("unknown aggregation: '" + s + "'");
}

std::string to_string(TimingSource t) {
  return t == TimingSource::wall_clock ? "wall_clock" : "synthetic";
}

TimingSource timing_source_from_string(const std::string& s) {
  if (s == "wall_clock") return TimingSource::wall_clock;
  if (s == "synthetic") return TimingSource::synthetic;
  throw InputError("unknown timing source: '" + s + "'");
}

std::string to_string(TimingIsolation t) {
  return t == TimingIsolation::serialize_timing ? "serialize_timing" : "pin_per_core";
}

TimingIsolation timing_isolation_from_string(const std::string& s) {
  if (s == "serialize_timing") return TimingIsolation::serialize_timing;
  if (s == "pin_per_core") return TimingIsolation::pin_per_core;
  throw InputError("unknown timing isolation: '" + s + "'");
}

// timed repetitions are globally serialized so parallel compiles/judging
// elsewhere cannot contend with the clock
std::mutex& timing_mutex() {
  static std::mutex mu;
  return mu;
}

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> out;
  std::istringstream in(command);
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string trim_trailing(const std::string& s) {
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return e == std::string::npos ? "" : s.substr(0, e + 1);
}

// judge convention: trailing whitespace per line and trailing newlines ignored
bool outputs_match(const std::string& got, const std::string& want, OutputComparison mode) {
  if (mode == OutputComparison::exact) return got == want;
  std::istringstream a(got), b(want);
  std::string la, lb;
  while (true) {
    bool ra = static_cast<bool>(std::getline(a, la));
    bool rb = static_cast<bool>(std::getline(b, lb));
    while (!ra && rb && trim_trailing(lb).empty()) rb = static_cast<bool>(std::getline(b, lb));
    while (!rb && ra && trim_trailing(la).empty()) ra = static_cast<bool>(std::getline(a, la));
    if (!ra || !rb) return ra == rb;
    if (trim_trailing(la) != trim_trailing(lb)) return false;
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!(per_test_time_limit_seconds > 0)) {
    throw UsageError("per-test time limit must be positive");
  }
  if (repetitions < 1) throw UsageError("repetitions must be >= 1");
  if (warmups < 0) throw UsageError("warmups must be >= 0");
  if (worker_count < 1) throw UsageError("worker count must be >= 1");
  if (compile_command.find("{src}") == std::string::npos ||
      compile_command.find("{out}") == std::string::npos) {
    throw UsageError("compile command must contain {src} and {out} placeholders");
  }
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  if (j.contains("compile_command")) c.compile_command = j.at("compile_command").get<std::string>();
  if (j.contains("per_test_time_limit_seconds")) {
    c.per_test_time_limit_seconds = j.at("per_test_time_limit_seconds").get<double>();
  }
  if (j.contains("repetitions")) c.repetitions = j.at("repetitions").get<int>();
  if (j.contains("warmups")) c.warmups = j.at("warmups").get<int>();
  if (j.contains("aggregation")) {
    c.aggregation = aggregation_from_string(j.at("aggregation").get<std::string>());
  }
  if (j.contains("timing_isolation")) {
    c.timing_isolation = timing_isolation_from_string(j.at("timing_isolation").get<std::string>());
  }
  if (j.contains("timing_source")) {
    c.timing_source = timing_source_from_string(j.at("timing_source").get<std::string>());
  }
  if (j.contains("max_output_bytes")) {
    c.max_output_bytes = j.at("max_output_bytes").get<std::size_t>();
  }
  if (j.contains("worker_count")) c.worker_count = j.at("worker_count").get<int>();
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["compile_command"] = compile_command;
  j["per_test_time_limit_seconds"] = per_test_time_limit_seconds;
  j["repetitions"] = repetitions;
  j["warmups"] = warmups;
  j["aggregation"] = to_string(aggregation);
  j["timing_isolation"] = to_string(timing_isolation);
  j["timing_source"] = to_string(timing_source);
  j["max_output_bytes"] = max_output_bytes;
  j["worker_count"] = worker_count;
  return j;
}

struct CompiledBinary::Scratch {
  std::string dir;
  explicit Scratch(std::string d) : dir(std::move(d)) {}
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

CompiledBinary::CompiledBinary(std::string dir, std::string exe_path, std::string source)
    : scratch_(std::make_shared<Scratch>(std::move(dir))),
      exe_path_(std::move(exe_path)),
      source_(std::move(source)) {}

const std::string& CompiledBinary::scratch_dir() const { return scratch_->dir; }

std::optional<double> synthetic_runtime_seconds(const std::string& source) {
  static const std::string marker = "// runtime-ms:";
  std::size_t pos = source.find(marker);
  if (pos == std::string::npos) return std::nullopt;
  const char* begin = source.c_str() + pos + marker.size();
  char* end = nullptr;
  double ms = std::strtod(begin, &end);
  if (end == begin || !(ms >= 0) || !std::isfinite(ms)) return std::nullopt;
  return ms / 1000.0;
}

std::variant<CompiledBinary, CompileFailure> compile(const std::string& source,
                                                     const RunConfig& config) {
  config.validate();
  char tmpl[] = "/tmp/perfforge-XXXXXX";
  char* dir = ::mkdtemp(tmpl);
  if (dir == nullptr) throw EnvironmentError("cannot create scratch directory");
  const std::string scratch = dir;
  const std::string src_name = "main.cpp";
  const std::string out_name = "prog";
  {
    std::ofstream out(scratch + "/" + src_name, std::ios::binary);
    out << source;
    if (!out) {
      fs::remove_all(scratch);
      throw EnvironmentError("cannot write source into scratch directory");
    }
  }
  // the compiler runs with cwd=scratch and relative paths so diagnostics
  // never leak the randomized scratch path
  subprocess::RunSpec spec;
  spec.argv = split_command(
      replace_all(replace_all(config.compile_command, "{src}", src_name), "{out}", out_name));
  spec.cwd = scratch;
  spec.timeout_seconds = 120.0;
  spec.max_output_bytes = config.max_output_bytes;
  subprocess::RunResult r;
  try {
    r = subprocess::run(spec);
  } catch (...) {
    fs::remove_all(scratch);
    throw;
  }
  if (r.exit_code != 0) {
    std::string log = r.stderr_bytes.empty() ? r.stdout_bytes : r.stderr_bytes;
    if (log.empty()) log = "compiler exited with status " + std::to_string(r.exit_code);
    fs::remove_all(scratch);
    return CompileFailure{std::move(log)};
  }
  return CompiledBinary(scratch, scratch + "/" + out_name, source);
}

std::vector<TestOutcome> run_tests(const CompiledBinary& binary,
                                   const std::vector<TestCase>& tests, const RunConfig& config) {
  std::vector<TestOutcome> out;
  out.reserve(tests.size());
  for (const TestCase& t : tests) {
    subprocess::RunSpec spec;
    spec.argv = {binary.path()};
    spec.stdin_bytes = t.stdin_payload;
    spec.cwd = binary.scratch_dir();
    spec.timeout_seconds = config.per_test_time_limit_seconds;
    spec.max_output_bytes = config.max_output_bytes;
    subprocess::RunResult r = subprocess::run(spec);
    TestOutcome o;
    o.id = t.id;
    o.timed_out = r.timed_out;
    o.exit_code = r.exit_code;
    o.wall_seconds = r.wall_seconds;
    o.passed = !r.timed_out && r.exit_code == 0 && !r.output_truncated &&
               outputs_match(r.stdout_bytes, t.expected_stdout, t.comparison);
    out.push_back(std::move(o));
  }
  return out;
}

double measure_runtime(const CompiledBinary& binary, const std::vector<TestCase>& tests,
                       const RunConfig& config) {
  if (config.timing_source == TimingSource::synthetic) {
    if (auto s = synthetic_runtime_seconds(binary.source())) return *s;
    throw InputError("synthetic timing requires a '// runtime-ms: <N>' marker in the source");
  }
  std::unique_lock<std::mutex> lock(timing_mutex(), std::defer_lock);
  cpu_set_t previous_mask;
  bool pinned = false;
  if (config.timing_isolation == TimingIsolation::serialize_timing) {
    lock.lock();
  } else if (sched_getaffinity(0, sizeof(previous_mask), &previous_mask) == 0) {
    const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    const unsigned core =
        std::hash<std::thread::id>{}(std::this_thread::get_id()) % cores;
    cpu_set_t mask;
    CPU_ZERO(&mask);
    CPU_SET(core, &mask);
    pinned = sched_setaffinity(0, sizeof(mask), &mask) == 0;
  }
  struct AffinityRestore {
    bool active;
    cpu_set_t* mask;
    ~AffinityRestore() {
      if (active) sched_setaffinity(0, sizeof(*mask), mask);
    }
  } restore{pinned, &previous_mask};

  std::vector<double> samples;
  const int total = config.warmups + config.repetitions;
  for (int rep = 0; rep < total; ++rep) {
    double suite_total = 0.0;
    for (const TestCase& t : tests) {
      subprocess::RunSpec spec;
      spec.argv = {binary.path()};
      spec.stdin_bytes = t.stdin_payload;
      spec.cwd = binary.scratch_dir();
      spec.timeout_seconds = config.per_test_time_limit_seconds;
      spec.max_output_bytes = config.max_output_bytes;
      subprocess::RunResult r = subprocess::run(spec);
      if (r.timed_out) {
        throw EnvironmentError("measurement failure: timeout on test '" + t.id +
                               "' during timed repetition");
      }
      if (r.exit_code != 0) {
        throw EnvironmentError("measurement failure: nonzero exit on test '" + t.id +
                               "' during timed repetition");
      }
      suite_total += r.wall_seconds;
    }
    if (rep >= config.warmups) samples.push_back(suite_total);
  }

  std::sort(samples.begin(), samples.end());
  switch (config.aggregation) {
    case Aggregation::min:
      return samples.front();
    case Aggregation::mean:
      return std::accumulate(samples.begin(), samples.end(), 0.0) /
             static_cast<double>(samples.size());
    case Aggregation::median: {
      const std::size_t n = samples.size();
      return n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
    }
  }
  return samples.front();
}

double speedup(double t_slow, double t_fast, bool correct) {
  if (!(t_slow > 0) || !std::isfinite(t_slow)) {
    throw InputError("invalid measurement: t_slow must be positive and finite");
  }
  if (!correct) return 1.0;
  if (!(t_fast > 0) || !std::isfinite(t_fast)) {
    throw InputError("invalid measurement: t_fast must be positive and finite");
  }
  return t_slow / t_fast;
}

bool effective(const EvalResult& result) {
  return result.correct && result.speedup >= kEffectiveSpeedupThreshold;
}

EvalResult finalize_result(bool compiled, std::string compile_log,
                           std::vector<TestOutcome> per_test,
                           std::optional<double> runtime_seconds, double t_slow) {
  EvalResult r;
  r.compiled = compiled;
  r.compile_log = std::move(compile_log);
  r.per_test = std::move(per_test);
  r.correct = compiled && !r.per_test.empty() &&
              std::all_of(r.per_test.begin(), r.per_test.end(),
                          [](const TestOutcome& t) { return t.passed; });
  r.runtime_seconds = runtime_seconds;
  if (r.correct && !runtime_seconds) {
    throw InputError("correct result requires a measured runtime");
  }
  r.speedup = speedup(t_slow, r.correct ? *runtime_seconds : 1.0, r.correct);
  r.effective = effective(r);
  return r;
}

EvalResult evaluate_candidate(const std::string& source, const std::vector<TestCase>& tests,
                              double t_slow, const RunConfig& config) {
  auto compiled = compile(source, config);
  if (std::holds_alternative<CompileFailure>(compiled)) {
    EvalResult r;
    r.compiled = false;
    r.compile_log = std::get<CompileFailure>(compiled).log;
    r.correct = false;
    r.speedup = speedup(t_slow, 1.0, false);
    r.effective = false;
    return r;
  }
  const CompiledBinary& binary = std::get<CompiledBinary>(compiled);
  std::vector<TestOutcome> outcomes = run_tests(binary, tests, config);
  const bool all_passed =
      !outcomes.empty() &&
      std::all_of(outcomes.begin(), outcomes.end(), [](const TestOutcome& t) { return t.passed; });
  std::optional<double> runtime;
  if (all_passed) runtime = measure_runtime(binary, tests, config);
  if (config.timing_source == TimingSource::synthetic) {
    for (TestOutcome& t : outcomes) t.wall_seconds = 0.0;
  }
  return finalize_result(true, "", std::move(outcomes), runtime, t_slow);
}

double baseline_runtime(const std::string& source, const std::vector<TestCase>& tests,
                        const RunConfig& config) {
  if (config.timing_source == TimingSource::synthetic) {
    if (auto s = synthetic_runtime_seconds(source)) return *s;
    throw InputError("synthetic timing requires a '// runtime-ms: <N>' marker in the source");
  }
  auto compiled = compile(source, config);
  if (std::holds_alternative<CompileFailure>(compiled)) {
    throw InputError("baseline program does not compile: " +
                     std::get<CompileFailure>(compiled).log);
  }
  return measure_runtime(std::get<CompiledBinary>(compiled), tests, config);
}

Metrics aggregate_metrics(const std::vector<EvalResult>& results) {
  if (results.empty()) throw InputError("metrics undefined for an empty result list");
  Metrics m;
  std::size_t effective_n = 0, correct_n = 0;
  double speedup_sum = 0.0;
  for (const EvalResult& r : results) {
    speedup_sum += r.speedup;
    effective_n += r.effective ? 1 : 0;
    correct_n += r.correct ? 1 : 0;
  }
  const double n = static_cast<double>(results.size());
  m.mean_speedup = speedup_sum / n;
  m.effective_rate_percent = 100.0 * static_cast<double>(effective_n) / n;
  m.accuracy_percent = 100.0 * static_cast<double>(correct_n) / n;
  return m;
}

std::vector<TestCase> load_problem_tests(const std::string& tests_dir,
                                         const std::string& problem_id,
                                         OutputComparison comparison) {
  fs::path dir = fs::path(tests_dir) / problem_id / "tests";
  if (!fs::is_directory(dir)) {
    throw InputError("missing test bundle directory: " + dir.string());
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".in") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  std::vector<TestCase> out;
  for (const std::string& name : names) {
    fs::path in_path = dir / (name + ".in");
    fs::path out_path = dir / (name + ".out");
    if (!fs::exists(out_path)) {
      throw InputError("test case '" + name + "' has no .out file in " + dir.string());
    }
    TestCase t;
    t.id = name;
    t.stdin_payload = read_file(in_path.string());
    t.expected_stdout = read_file(out_path.string());
    t.comparison = comparison;
    out.push_back(std::move(t));
  }
  if (out.empty()) throw InputError("no test cases under " + dir.string());
  return out;
}

json to_json(const EvalResult& r) {
  json j;
  j["compiled"] = r.compiled;
  if (!r.compile_log.empty()) j["compile_log"] = r.compile_log;
  json per_test = json::array();
  for (const TestOutcome& t : r.per_test) {
    per_test.push_back(json{{"id", t.id},
                            {"passed", t.passed},
                            {"wall_seconds", t.wall_seconds},
                            {"timed_out", t.timed_out},
                            {"exit_code", t.exit_code}});
  }
  j["per_test"] = per_test;
  j["runtime_seconds"] = r.runtime_seconds ? json(*r.runtime_seconds) : json(nullptr);
  j["correct"] = r.correct;
  j["speedup"] = r.speedup;
  j["effective"] = r.effective;
  return j;
}

EvalResult result_from_json(const json& j) {
  EvalResult r;
  try {
    r.compiled = j.at("compiled").get<bool>();
    r.compile_log = j.value("compile_log", "");
    for (const json& t : j.at("per_test")) {
      TestOutcome o;
      o.id = t.at("id").get<std::string>();
      o.passed = t.at("passed").get<bool>();
      o.wall_seconds = t.at("wall_seconds").get<double>();
      o.timed_out = t.value("timed_out", false);
      o.exit_code = t.value("exit_code", 0);
      r.per_test.push_back(std::move(o));
    }
    if (!j.at("runtime_seconds").is_null()) {
      r.runtime_seconds = j.at("runtime_seconds").get<double>();
    }
    r.correct = j.at("correct").get<bool>();
    r.speedup = j.at("speedup").get<double>();
    r.effective = j.at("effective").get<bool>();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed eval result record: ") + e.what());
  }
  return r;
}

}  // namespace perfforge::evalbench
