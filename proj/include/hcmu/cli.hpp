#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hcmu::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Runs one command line (without the program name). Summaries go to `out`;
/// failures are written to `err` as one JSON record
/// {"error": <kind>, "message": ..., "exit_code": n}.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Same, on std::cout / std::cerr.
int dispatch(const std::vector<std::string>& args);

}  // namespace hcmu::cli
