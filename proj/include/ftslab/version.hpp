#pragma once

namespace ftslab {

inline constexpr const char* kVersion = "0.1.0";

} // namespace ftslab
