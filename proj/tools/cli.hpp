#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfo::cli {

/// Runs the command line `args` (without the program name). Returns the
/// process exit code: 0 on success, 2 for bad flags or values outside a
/// function's domain, 1 for any other failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// FNV-1a 64 of the file contents as 16 hex digits; stored in manifests.
std::string file_digest(const std::string& path);

}  // namespace cfo::cli
