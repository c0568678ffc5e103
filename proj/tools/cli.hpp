#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfcn::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kAssertion = 3 };

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfcn::cli
