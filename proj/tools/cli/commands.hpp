#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace drlab {

/// Runs one command line; args[0] is the program name. Returns the process
/// exit code (0 ok, 1 validation failure, 2 usage, 3 numerical, 4 resource).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Environment variable naming the default output directory.
inline constexpr const char* out_dir_env = "DRLAB_OUT_DIR";

}  // namespace drlab
