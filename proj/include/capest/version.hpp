#pragma once

namespace capest {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace capest
