#pragma once

#include <string_view>

namespace warprf {

inline constexpr std::string_view kVersion = "warprf 0.1.0";

}  // namespace warprf
