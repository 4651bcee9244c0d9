#pragma once

// Command-line front end. Exit codes: 0 success, 2 usage or validation,
// 3 I/O, 4 partial or non-converged result, 5 solver guard violation.

#include <iosfwd>
#include <string>
#include <vector>

namespace rrcf::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kIo = 3,
    kPartial = 4,
    kGuard = 5,
};

/// Runs one invocation; argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace rrcf::cli
