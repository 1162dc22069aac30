#pragma once

namespace netdecode {

inline constexpr const char* version = "0.1.0";

} // namespace netdecode
