#pragma once

#include <iosfwd>

namespace pdlm {

// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

// Entry point of the `pdlm` tool. `in` feeds `filter` when it reads standard input.
int run_command(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace pdlm
