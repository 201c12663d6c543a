#pragma once

#include <iosfwd>

namespace gridtrack {

/// Entry point for the gridtrack tool. Returns 0 on success, 2 on usage
/// errors and 1 on runtime failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gridtrack
