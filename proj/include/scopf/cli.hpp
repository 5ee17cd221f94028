#pragma once

#include <string>
#include <vector>

namespace scopf {

// Entry point behind the `solve` binary; separated so tests can drive the
// command line in-process. Exit codes: 0 optimal, 1 usage or input error,
// 2 iteration limit, 3 infeasible.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace scopf
