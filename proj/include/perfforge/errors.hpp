#pragma once

#include <stdexcept>
#include <string>

namespace perfforge {

// Process exit codes used by the CLI. 0 is success.
enum class ExitCode : int {
  ok = 0,
  usage = 1,
  input = 2,
  environment = 3,
  remote_service = 4,
};

class Error : public std::runtime_error {
 public:
  explicit Error(std::string message, ExitCode code = ExitCode::input)
      : std::runtime_error(std::move(message)), code_(code) {}

  ExitCode exit_code() const { return code_; }

 private:
  ExitCode code_;
};

// Bad flag/config values: factor <= 1, budget <= 0, epsilon out of range, ...
class UsageError : public Error {
 public:
  explicit UsageError(std::string message) : Error(std::move(message), ExitCode::usage) {}
};

// Malformed or inconsistent data: duplicate keys, invalid log-probs,
// unparseable records, protocol violations.
class InputError : public Error {
 public:
  explicit InputError(std::string message) : Error(std::move(message), ExitCode::input) {}
};

// Missing compiler, unwritable scratch space, dead filesystem.
class EnvironmentError : public Error {
 public:
  explicit EnvironmentError(std::string message) : Error(std::move(message), ExitCode::environment) {}
};

// Remote chat endpoint unreachable or persistently failing after retries.
class RemoteServiceError : public Error {
 public:
  explicit RemoteServiceError(std::string message) : Error(std::move(message), ExitCode::remote_service) {}
};

// A structured model reply that does not match the required grammar.
// Carries the raw reply so callers can journal or report it.
class ExtractionFormatError : public InputError {
 public:
  ExtractionFormatError(std::string message, std::string raw_reply)
      : InputError(std::move(message)), raw_reply_(std::move(raw_reply)) {}

  const std::string& raw_reply() const { return raw_reply_; }

 private:
  std::string raw_reply_;
};

// Strict unpack violation; the message names the first violation.
class ParseError : public InputError {
 public:
  explicit ParseError(std::string violation)
      : InputError("parse error: " + violation), violation_(std::move(violation)) {}

  const std::string& violation() const { return violation_; }

 private:
  std::string violation_;
};

}  // namespace perfforge
