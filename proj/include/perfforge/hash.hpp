#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace perfforge {

// FNV-1a, used for stable non-cryptographic identifiers (pair ids, request
// keys, provenance digests). Never std::hash: outputs must be identical
// across runs, builds and platforms.
inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::string fnv1a64_hex(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

// Digest of a file's contents as hex; throws EnvironmentError when unreadable.
std::string file_digest(const std::string& path);

}  // namespace perfforge
