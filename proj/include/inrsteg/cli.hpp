#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace inrsteg::cli {

/// Runs one command. `args` excludes the program name.
/// Returns 0 on success, 2 on usage errors and 1 on runtime errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace inrsteg::cli
