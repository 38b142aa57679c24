#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace caudit::cli {

/// Full command-line entry point; returns the process exit code.
/// Exit codes are stable; see the README table.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

} // namespace caudit::cli
