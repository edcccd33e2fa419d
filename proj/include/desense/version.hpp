#pragma once

namespace desense {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace desense
