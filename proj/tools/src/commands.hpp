#pragma once

#include <iosfwd>

#include "run_config.hpp"

namespace biot::cli {

struct RunSummary {
  double wall_seconds = 0.0;
  int peak_dofs = 0;
};

/// Runs the configured command and writes its CSV to `out`.
RunSummary run(const RunConfig& config, std::ostream& out);

/// Maps an exception thrown by parse_config or run to a process exit code:
/// 2 for configuration errors, 1 for numerical failures.
int exit_code_for(const std::exception& e);

}  // namespace biot::cli
