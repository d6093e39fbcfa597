#pragma once

#include <iostream>
#include <string_view>

namespace occunav {

inline constexpr std::string_view kVersion = "0.1.0";

/// Command-line entry point. Returns 0 on success, 1 on usage errors and 2
/// on data errors (missing, truncated or malformed inputs).
int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace occunav
