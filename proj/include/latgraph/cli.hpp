#pragma once

#include <string>
#include <vector>

namespace latgraph {

// Entry point behind the latgraph binary; also invoked in-process by tests.
// args excludes the program name. Exit codes: 0 success, 1 runtime failure,
// 2 usage/config error, 3 I/O error.
int run_cli(const std::vector<std::string>& args);

}  // namespace latgraph
