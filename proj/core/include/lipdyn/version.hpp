#pragma once

namespace lipdyn {

inline constexpr const char* kVersionString = "lipdyn-0.1.0";

}  // namespace lipdyn
