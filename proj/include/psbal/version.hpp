#pragma once

namespace psbal {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace psbal
