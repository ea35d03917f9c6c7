#include "perfforge/jsonl.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "perfforge/errors.hpp"
#include "perfforge/hash.hpp"
#include "perfforge/version.hpp"

namespace fs = std::filesystem;

namespace perfforge {

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EnvironmentError("cannot read file for digest: " + path);
  std::uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
    if (in.eof()) break;
  }
  return hex64(h);
}

json Provenance::to_json() const {
  json j;
  j["perfforge"] = {
      {"stage", stage},          {"version", version},
      {"seed", seed},            {"config_digest", config_digest},
      {"input_digests", input_digests}, {"created_at", created_at},
  };
  return j;
}

std::optional<Provenance> Provenance::from_json(const json& j) {
  if (!j.is_object() || !j.contains("perfforge")) return std::nullopt;
  const json& p = j.at("perfforge");
  Provenance out;
  out.stage = p.value("stage", "");
  out.version = p.value("version", "");
  out.seed = p.value("seed", std::uint64_t{0});
  out.config_digest = p.value("config_digest", "");
  if (p.contains("input_digests")) {
    for (auto it = p.at("input_digests").begin(); it != p.at("input_digests").end(); ++it) {
      out.input_digests[it.key()] = it.value().get<std::string>();
    }
  }
  out.created_at = p.value("created_at", "");
  return out;
}

JsonlFile read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("missing input artifact: " + path);
  JsonlFile out;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw InputError(path + ":" + std::to_string(lineno) + ": invalid JSON line: " + e.what());
    }
    if (first) {
      first = false;
      if (auto prov = Provenance::from_json(j)) {
        out.provenance = std::move(prov);
        continue;
      }
    }
    out.records.push_back(std::move(j));
  }
  return out;
}

namespace {

void rename_into_place(const std::string& tmp, const std::string& path) {
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw EnvironmentError("cannot move output into place: " + path + ": " + ec.message());
  }
}

std::string temp_sibling(const std::string& path) {
  fs::path p(path);
  fs::path dir = p.parent_path();
  if (dir.empty()) dir = ".";
  return (dir / (p.filename().string() + ".tmp." + std::to_string(::getpid()))).string();
}

}  // namespace

void write_jsonl_atomic(const std::string& path, const std::optional<Provenance>& provenance,
                        const std::vector<json>& records) {
  const std::string tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw EnvironmentError("cannot write output: " + tmp);
    if (provenance) out << provenance->to_json().dump() << '\n';
    for (const json& r : records) out << r.dump() << '\n';
    out.flush();
    if (!out) throw EnvironmentError("write failed: " + tmp);
  }
  rename_into_place(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("missing input file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw EnvironmentError("cannot write output: " + tmp);
    out << contents;
    out.flush();
    if (!out) throw EnvironmentError("write failed: " + tmp);
  }
  rename_into_place(tmp, path);
}

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Provenance make_provenance(const std::string& stage, std::uint64_t seed,
                           const std::string& config_digest,
                           const std::vector<std::string>& input_paths) {
  Provenance p;
  p.stage = stage;
  p.version = kVersion;
  p.seed = seed;
  p.config_digest = config_digest;
  for (const std::string& in : input_paths) p.input_digests[in] = file_digest(in);
  p.created_at = iso8601_utc_now();
  return p;
}

std::vector<std::string> comparable_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("missing artifact for comparison: " + path);
  std::vector<std::string> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && !line.empty()) {
      first = false;
      try {
        json j = json::parse(line);
        if (j.is_object() && j.contains("perfforge")) {
          j["perfforge"].erase("created_at");
          out.push_back(j.dump());
          continue;
        }
      } catch (const std::exception&) {
        // treated as an ordinary line below
      }
    }
    first = false;
    out.push_back(line);
  }
  return out;
}

}  // namespace perfforge
