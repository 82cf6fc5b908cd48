#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridsim {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitValidation = 2,
    kExitRuntime = 3,
};

/// Entry point behind the `gridsim` executable. `args` excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridsim
