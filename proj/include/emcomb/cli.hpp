#pragma once

#include <iosfwd>

namespace emcomb {

/// Entry point of the `emcomb` tool. Returns 0 on success, 2 on usage,
/// config or I/O errors, 3 on numerical failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace emcomb
