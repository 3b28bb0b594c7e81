#pragma once

namespace tminimax {

inline constexpr const char* version = "0.1.0";

}  // namespace tminimax
