#pragma once

#include "kerrflow/campaigns.hpp"

namespace kerrflow::cli {

/// Process exit status of the kerrflow tool.
enum ExitCode : int { Ok = 0, Usage = 2, Numerical = 3, Violation = 4, SweepFailure = 5 };

/// A counterexample outranks a numerical problem in the same run.
inline ExitCode verify_exit_code(const SearchReport& r) {
  if (r.violations > 0) return Violation;
  return r.ok ? Ok : Numerical;
}

}  // namespace kerrflow::cli
