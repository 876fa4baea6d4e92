#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace greybox::cli {

/// Exit codes: 0 success, 1 runtime or configuration failure, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Quick invariant checks on both default environments; one line per check.
bool selftest(std::ostream& out);

}  // namespace greybox::cli
