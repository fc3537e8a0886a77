#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pavetwin {

/// Runs the `pavetwin` command line. `args` excludes the program name.
/// Returns the process exit code (0 ok, 2 usage, 3 data, 4 numerical).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace pavetwin
