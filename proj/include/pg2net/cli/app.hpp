#pragma once

namespace pg2net::cli {

/// Parses argv and runs one subcommand. Exit codes: 0 ok, 1 usage error,
/// 2 data or validation error, 3 internal invariant violation.
int dispatch(int argc, const char* const* argv);

}  // namespace pg2net::cli
