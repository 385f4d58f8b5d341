#pragma once

namespace thermo {

inline constexpr const char* kVersion = "1.0.0";

} // namespace thermo
