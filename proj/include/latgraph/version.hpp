#pragma once

namespace latgraph {

inline constexpr const char* kToolName = "latgraph";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace latgraph
