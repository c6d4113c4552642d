#pragma once

namespace kerrflow {

/// Numeric thresholds shared by every module. One value is threaded through
/// the library so a run can be reproduced from its configuration alone.
struct ToleranceConfig {
  // sin(theta) below this routes null completion to the stereographic patch.
  double axis_threshold = 1e-6;
  // |G| relative to the magnitude of its terms.
  double null_tol = 1e-8;
  // residual bound for trapped-set membership (relative, like null_tol).
  double trapped_tol = 1e-9;
  // orientation contraction below this (relative) is a numerical failure.
  double orientation_tol = 1e-12;
  // bracket for radial solves: (r_plus * (1 + horizon_offset), radial_max * M).
  double horizon_offset = 1e-10;
  double radial_max = 1e3;
  // sampler rejects |xi_t| below this fraction of |xi|.
  double xi_t_floor = 1e-10;
};

}  // namespace kerrflow
