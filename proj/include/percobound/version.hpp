#pragma once

namespace percobound {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace percobound
