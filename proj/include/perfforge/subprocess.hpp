#pragma once

#include <string>
#include <vector>

namespace perfforge::subprocess {

struct RunResult {
  int exit_code = -1;      // -signal when terminated by a signal
  bool timed_out = false;
  bool output_truncated = false;
  std::string stdout_bytes;
  std::string stderr_bytes;
  double wall_seconds = 0.0;
};

struct RunSpec {
  std::vector<std::string> argv;   // argv[0] resolved via PATH
  std::string stdin_bytes;
  std::string cwd;                 // empty: inherit
  double timeout_seconds = 0.0;    // <= 0: no limit
  std::size_t max_output_bytes = 16u << 20;
};

// Spawns the child in its own process group, feeds stdin and drains both
// output pipes without deadlocking, and kills the whole group on timeout.
// Throws EnvironmentError when the executable cannot be spawned.
RunResult run(const RunSpec& spec);

}  // namespace perfforge::subprocess
