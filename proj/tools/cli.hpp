#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "urisk/error.hpp"

namespace urisk::cli {

/// Process exit status for a library error: 1 config, 2 data, 3 numeric.
int exit_code(ErrorKind kind);

/// Runs one subcommand. `args` excludes the program name. Reports go to
/// `out`, errors to `err` as a single JSON object. Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace urisk::cli
