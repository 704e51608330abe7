#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mailtopics::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point behind the `mailtopics` binary. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// True for error codes caused by bad input rather than runtime failures.
bool is_validation_error(const std::string& code);

}  // namespace mailtopics::cli
