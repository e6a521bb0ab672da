#pragma once

namespace svehnn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace svehnn
