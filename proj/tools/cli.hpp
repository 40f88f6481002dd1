#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace netqre::cli {

enum ExitCode { kOk = 0, kNoCandidates = 1, kIoError = 2, kUnsupported = 3 };

/// Runs one `netqre` command line; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace netqre::cli
