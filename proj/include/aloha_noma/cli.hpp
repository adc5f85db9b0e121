#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace aloha_noma::cli {

/// Entry point of the aloha-noma tool. `args` excludes the program name.
/// Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace aloha_noma::cli
