#pragma once

namespace sgcl {

inline constexpr const char* kToolName = "sgcl";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace sgcl
