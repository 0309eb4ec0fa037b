#pragma once

namespace mrregger {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mrregger
