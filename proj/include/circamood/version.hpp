#pragma once

#include <string_view>

namespace circamood {

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace circamood
