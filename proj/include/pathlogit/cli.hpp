#pragma once

#include <iosfwd>

namespace pathlogit {

/// Runs the command-line interface. Returns the process exit status:
/// 0 on success, 1 on a runtime error, 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pathlogit
