#pragma once

namespace pdterm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pdterm
