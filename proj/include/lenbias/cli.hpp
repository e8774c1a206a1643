#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lenbias {

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one `lenbias` invocation. `args` excludes the program name. Human
/// output goes to `out`; failures are reported on `err` as one JSON object
/// {"error": {"kind", "message"}}. Returns the process exit status: 0 on
/// success, 1 when a pipeline step fails, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lenbias
