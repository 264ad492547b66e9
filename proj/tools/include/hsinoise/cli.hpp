#pragma once

#include <iosfwd>

namespace hsinoise {

/// Entry point of the `hsinoise` tool. Returns 0 on success, 1 on a usage
/// error, 2 when the command itself fails.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hsinoise
