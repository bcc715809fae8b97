#pragma once

namespace evtfair {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace evtfair
