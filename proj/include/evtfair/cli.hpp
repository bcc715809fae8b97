#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace evtfair {

// Runs one subcommand. Exit codes: 0 success, 1 domain error (one line
// "error: <Code>: <message>" on err), 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace evtfair
