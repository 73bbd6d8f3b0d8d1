#pragma once

namespace resilience {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace resilience
