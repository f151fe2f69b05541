#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace phsplit::cli {

/// Runs the command-line tool on `args` (program name excluded), writing
/// normal output to `out` and diagnostics to `err`.
///
/// Exit codes: 0 success; 2 configuration error (bad flags, malformed or
/// unwritable files, invalid parameters); 3 acceptance/validation failure
/// (order gate or property suite); 4 unsupported-structure request (scalar
/// coupling path on a non-scalar system).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phsplit::cli
