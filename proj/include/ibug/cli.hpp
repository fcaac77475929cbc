#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ibug {

/// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric or fit error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ibug
