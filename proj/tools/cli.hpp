#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mrregger::cli {

/// Exit codes: 0 success, 1 partial method failures, 2 invalid input/config.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitInvalid = 2;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace mrregger::cli
