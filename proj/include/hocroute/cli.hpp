#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hocroute {

/// Runs one CLI invocation. `args` excludes the program name.
/// Returns 0 on success, 1 on validation failure (with a one-line JSON error on
/// `err`) and 2 on a usage error.
int cli_dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace hocroute
