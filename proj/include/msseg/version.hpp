#pragma once

namespace msseg {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace msseg
