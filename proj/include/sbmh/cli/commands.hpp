#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sbmh::cli {

/// Entry point of the `sbmh` tool. args excludes the program name. Typed
/// errors are reported as one line `error[kind]: message` on `err` with a
/// non-zero return.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sbmh::cli
