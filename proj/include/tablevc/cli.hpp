#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tablevc {

// Exit codes: 0 success, 1 user error, 2 merge aborted on a true conflict,
// 3 internal error. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tablevc
