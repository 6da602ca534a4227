#pragma once

namespace hetlab {
inline constexpr const char* kVersion = "1.0.0";
}
