#pragma once

namespace ergosim {

inline constexpr const char* kVersion = "0.1.0";

// Version written into run directories; resume refuses to mix runs across
// incompatible schema revisions.
inline constexpr int kRunSchemaVersion = 1;

}  // namespace ergosim
