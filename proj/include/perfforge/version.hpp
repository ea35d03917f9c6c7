#pragma once

namespace perfforge {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace perfforge
