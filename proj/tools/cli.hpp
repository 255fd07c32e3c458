#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bess::cli {

/// Runs the bessopt command line. args excludes the program name.
/// Returns 0 on success, 1 on a usage error, 2 when a run fails.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bess::cli
