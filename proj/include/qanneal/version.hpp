#pragma once

namespace qanneal {

inline constexpr const char* kVersion = "0.1.0";

} // namespace qanneal
