#pragma once

#include <ostream>

namespace rede::cli {

/// Entry point behind the `rede` binary. Returns 0 on success, 1 on a usage
/// error and 2 on a runtime error; diagnostics go to `err`.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rede::cli
