#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lapconv::cli {

/// Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
int run(int argc, char** argv);

/// Same as above with explicit arguments (without the program name) and streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// --out if given, else the config's output field, else $LAPCONV_OUT, else "lapconv_out".
std::string resolve_output_dir(const std::string& flag, const std::string& from_config);

} // namespace lapconv::cli
