#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sants::cli {

/// Runs one `sants` invocation and returns its exit code:
/// 0 ok, 2 configuration error, 3 numeric fault, 4 data error, 1 other failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sants::cli
