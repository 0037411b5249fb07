#pragma once

namespace dagprobit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dagprobit
