// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace socialrec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kDataDirEnv = "SOCIALREC_DATA_DIR";

// Runs one subcommand. `args` excludes the program name. Machine-readable
// results go to `out` (or the declared output paths), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace socialrec::cli
