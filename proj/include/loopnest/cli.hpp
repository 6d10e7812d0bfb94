#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace loopnest {

/// Entry point of the `loopnest` binary. Exit status 0 on success, 2 on usage errors
/// (bad flags, unknown presets, malformed inputs), 1 on any other failure.
int run_cli(int argc, char** argv);

/// Same, with arguments excluding the program name and explicit streams (used by tests).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace loopnest
