#pragma once

namespace kmix {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace kmix
