#pragma once

// Batch command-line front end. Exit codes: 0 ok, 1 usage, 2 input/format,
// 3 numerical failure, 4 I/O.

#include "spinmech/common.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace spinmech::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInput = 2, kNumerical = 3, kIo = 4 };

int exit_code_for(ErrorCode code);

/// Runs one command. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spinmech::cli
