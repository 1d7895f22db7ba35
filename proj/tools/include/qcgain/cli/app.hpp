#pragma once

#include <iosfwd>

namespace qcgain::cli {

enum ExitCode : int { kExitOk = 0, kExitVerification = 1, kExitInput = 2, kExitSolver = 3 };

/// Entry point of the qcgain tool. Reports go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qcgain::cli
