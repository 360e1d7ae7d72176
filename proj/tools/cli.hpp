#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dpe::cli {

// Runs one discrete-param command. args excludes the program name.
// Returns the process exit status: 0 ok, 2 invalid input, 3 non-convergence.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dpe::cli
