#pragma once

#include <ostream>

namespace homoglab::cli {

/// Runs one subcommand. Exit codes: 0 success, 1 usage or validation error,
/// 2 numerical failure (including partially failed tables, which are still
/// written).
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace homoglab::cli
