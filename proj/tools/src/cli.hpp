#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gami::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kUsage = 2,
  kData = 3,
  kModelFormat = 4,
  kNumerical = 5,
};

// Runs one subcommand. argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace gami::cli
