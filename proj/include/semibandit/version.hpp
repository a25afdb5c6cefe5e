#pragma once

namespace semibandit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace semibandit
