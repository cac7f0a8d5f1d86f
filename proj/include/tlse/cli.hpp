#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tlse::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;     // numerical or resource failure
inline constexpr int kInputError = 2;
inline constexpr int kIllPosed = 3;    // ill-posed or non-generic problem

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tlse::cli
