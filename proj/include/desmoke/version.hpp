#pragma once

namespace desmoke {

inline constexpr const char* kToolVersion = "desmoke 0.1.0";

}  // namespace desmoke
