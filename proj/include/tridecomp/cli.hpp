#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tridecomp {

// Exit codes: 0 success, 1 usage or schema error, 2 verification or bound failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

// Runs one invocation. `args` excludes the program name. Results go to `out`
// (or the -o file), diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace tridecomp
