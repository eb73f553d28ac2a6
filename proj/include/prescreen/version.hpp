#pragma once

namespace prescreen {
inline constexpr const char* kVersion = "0.1.0";
}
