#pragma once

#include <iosfwd>

namespace cmf {

enum ExitCode : int { kExitOk = 0, kExitScientific = 1, kExitUsage = 2 };

// Entry point of the cmfilter command line tool.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cmf
