#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aifp {

// Exit codes: 0 success, 1 invalid input or failed run, 2 usage error.
int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli(int argc, char** argv);

}  // namespace aifp
