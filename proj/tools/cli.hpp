#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace plus::cli {

/// Exit codes: 0 ok, 1 usage, 2 data error, 3 infeasible or solver failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with args excluding the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace plus::cli
