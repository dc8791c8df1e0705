#pragma once

#include <iosfwd>

namespace levelset::cli {

enum ExitCode { kOk = 0, kRuntimeFailure = 1, kUsage = 2 };

/// Runs one command line. Errors are reported on `err` as a single "error: ..." line.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace levelset::cli
