#pragma once

// Command-line surface. Subcommands: gen, train, predict, ensemble, eval,
// report. Exit codes: 0 success, 2 usage/validation error, 3 numerical
// failure. Tables and data go to `out`, diagnostics to `err`.

#include <iosfwd>
#include <string>
#include <vector>

namespace vareg {

int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err);

}  // namespace vareg
