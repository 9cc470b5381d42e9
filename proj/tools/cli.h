#pragma once

#include <iosfwd>

namespace gctr::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRegistrationFailed = 1;
inline constexpr int kExitUsage = 2;

// `gctr register | benchmark | evaluate`; see README.md for the flags.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

}  // namespace gctr::cli
