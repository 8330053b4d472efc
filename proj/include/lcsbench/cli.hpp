#pragma once

#include <iosfwd>

namespace lcsbench {

/// Entry point of the lcsbench executable. Returns 0 on success, 1 on a
/// runtime failure and 2 on a configuration or usage error.
int runCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lcsbench
