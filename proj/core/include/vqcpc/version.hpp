#pragma once

namespace vqcpc {

inline constexpr const char* kVersionString = "0.1.0";

}  // namespace vqcpc
