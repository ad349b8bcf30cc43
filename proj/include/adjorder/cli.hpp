#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adjorder {

// Entry point of the `adjorder` tool. args[0] is the program name.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adjorder
