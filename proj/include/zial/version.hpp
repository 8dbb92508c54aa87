#pragma once

namespace zial {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace zial
