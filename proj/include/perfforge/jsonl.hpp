#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace perfforge {

using json = nlohmann::ordered_json;

// Provenance header embedded as the first line of every stage artifact.
// `created_at` is the one field excluded from determinism comparisons.
struct Provenance {
  std::string stage;
  std::string version;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::map<std::string, std::string> input_digests;
  std::string created_at;

  json to_json() const;
  static std::optional<Provenance> from_json(const json& j);
};

struct JsonlFile {
  std::optional<Provenance> provenance;
  std::vector<json> records;
};

// Reads a JSONL file; a leading provenance line is split out of `records`.
// Blank lines are skipped. Malformed lines raise InputError with the line number.
JsonlFile read_jsonl(const std::string& path);

// Writes temp-then-rename in the destination directory; partial outputs never
// land at the final path.
void write_jsonl_atomic(const std::string& path, const std::optional<Provenance>& provenance,
                        const std::vector<json>& records);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& contents);

std::string iso8601_utc_now();

Provenance make_provenance(const std::string& stage, std::uint64_t seed,
                           const std::string& config_digest,
                           const std::vector<std::string>& input_paths);

// Canonical line bytes for determinism comparisons: the provenance line with
// `created_at` removed, followed by all record lines verbatim.
std::vector<std::string> comparable_lines(const std::string& path);

}  // namespace perfforge
