#pragma once

#include <ostream>

namespace behc {
namespace cli {

// Full command-line front end; parses argv, runs the requested subcommand and
// writes records to `out` and diagnostics to `err`. Returns the process exit
// code: 0 ok, 1 numeric failure (diagnostic record emitted), 2 argument error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cli
}  // namespace behc
